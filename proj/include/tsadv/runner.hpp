#pragma once

#include "tsadv/config.hpp"

namespace tsadv {

/// Pipeline commands behind the CLI subcommands. Each reads its inputs
/// from the run's output directory, writes its artifacts there
/// atomically, and throws ConfigError / DataError / NumericError on
/// failure.

void cmd_prepare(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);

struct AttackRunSummary {
    std::size_t files_written = 0;
    std::size_t window_errors = 0;
};

/// Runs the configured (target x method x epsilon) matrix on the test
/// split. Per-window failures are recorded inside the result files and
/// counted here; they do not abort the run.
AttackRunSummary cmd_attack(const RunConfig& cfg, Exec exec = Exec::parallel);

void cmd_evaluate(const RunConfig& cfg);
void cmd_report(const RunConfig& cfg);

} // namespace tsadv
