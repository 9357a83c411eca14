#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "tsadv/runner.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_override;
    std::optional<std::uint64_t> seed_override;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "Run configuration file")->required();
    cmd->add_option("--out", opts.out_override, "Override the configured output directory");
    cmd->add_option("--seed", opts.seed_override, "Override the configured seed");
}

tsadv::RunConfig load(const CommonOpts& opts) {
    tsadv::RunConfig cfg = tsadv::RunConfig::from_file(opts.config_path);
    if (!opts.out_override.empty()) cfg.output_dir = opts.out_override;
    if (opts.seed_override) {
        cfg.seed = *opts.seed_override;
        cfg.dataset.synth.seed = cfg.seed;
        cfg.model.seed = cfg.seed + 1;
    }
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Targeted adversarial attacks on time-series forecasting models"};
    app.require_subcommand(1);

    CommonOpts prepare_opts, train_opts, attack_opts, evaluate_opts, report_opts;
    bool attack_serial = false;

    add_common(app.add_subcommand("prepare", "Build the windowed train/test dataset"),
               prepare_opts);
    add_common(app.add_subcommand("train", "Train the forecasting model"), train_opts);
    CLI::App* attack_cmd =
        app.add_subcommand("attack", "Run the configured attack matrix on the test split");
    add_common(attack_cmd, attack_opts);
    attack_cmd->add_flag("--serial", attack_serial,
                         "Use the serial reference path instead of the OpenMP fan-out");
    add_common(app.add_subcommand("evaluate", "KS tables, histograms and sweep curves"),
               evaluate_opts);
    add_common(app.add_subcommand("report", "Human-readable summary of a finished run"),
               report_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("prepare")) {
            tsadv::cmd_prepare(load(prepare_opts));
        } else if (app.got_subcommand("train")) {
            tsadv::cmd_train(load(train_opts));
        } else if (app.got_subcommand("attack")) {
            auto summary = tsadv::cmd_attack(load(attack_opts),
                                             attack_serial ? tsadv::Exec::serial
                                                           : tsadv::Exec::parallel);
            if (summary.window_errors > 0) return tsadv::exit_numeric;
        } else if (app.got_subcommand("evaluate")) {
            tsadv::cmd_evaluate(load(evaluate_opts));
        } else if (app.got_subcommand("report")) {
            tsadv::cmd_report(load(report_opts));
        }
    } catch (const tsadv::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return tsadv::exit_config;
    } catch (const tsadv::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return tsadv::exit_data;
    } catch (const tsadv::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return tsadv::exit_numeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return tsadv::exit_generic;
    }
    return tsadv::exit_ok;
}
