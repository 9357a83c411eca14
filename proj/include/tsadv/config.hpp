#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tsadv/attack.hpp"
#include "tsadv/dataset.hpp"
#include "tsadv/model.hpp"
#include "tsadv/target.hpp"

namespace tsadv {

/// Sectioned key=value file ('#' and ';' comments). Unknown keys are
/// rejected so typos fail loudly.
class IniFile {
public:
    static IniFile parse(const std::string& text);
    static IniFile parse_file(const std::filesystem::path& path);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const;
    const std::map<std::string, std::map<std::string, std::string>>& sections() const {
        return sections_;
    }

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

struct DatasetSection {
    std::string source = "synthetic"; // synthetic | csv
    std::filesystem::path path;
    CsvSchema schema;
    std::int64_t resample_seconds = 0; // 0 = no resampling
    std::size_t window_size = 5;
    double train_fraction = 0.8;
    SynthSpec synth;
};

struct AttackSection {
    std::vector<AttackMethod> methods = {AttackMethod::fgsm, AttackMethod::pgd,
                                         AttackMethod::mapgd};
    std::vector<std::string> targets = {"dta_up", "dta_down", "ata",       "tta_up",
                                        "tta_down", "tta_amp", "untargeted"};
    std::vector<double> epsilons = {0.01, 0.1, 0.5, 1.0, 1.5};
    std::size_t n_iter = 40;
    double step = 0.0; // 0 = per-method default
    double momentum_alpha = 0.75;
    double rho = 0.75;
    double tau = 0.9;
    std::size_t tta_t1 = 50;
    std::size_t tta_t2 = 100;
    GradMode grad_mode = GradMode::sign;
    LimSemantics lim = LimSemantics::upper_clip;
    bool record_trace = false;
};

struct EvalSection {
    std::size_t group_size = 5;
    std::size_t bins = 20;
    double table_epsilon = 0.1;
    std::vector<double> sweep_epsilons; // empty = attack epsilons
    std::string reference = "truth";    // truth | clean
};

/// One declarative file drives the whole pipeline; the seed is fixed for
/// the entire run.
struct RunConfig {
    DatasetSection dataset;
    ModelConfig model;
    TrainConfig train_cfg;
    AttackSection attack;
    EvalSection eval;
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 42;

    static RunConfig from_file(const std::filesystem::path& path);
    static RunConfig from_ini(const IniFile& ini);
    void validate() const;

    /// Target spec for one of the configured target names, with tau and
    /// the temporal window filled in from the attack section.
    AttackTargetSpec target_spec(const std::string& name) const;

    /// Attack config for (method, epsilon) from the attack section.
    AttackConfig attack_config(AttackMethod method, double epsilon) const;

    // Derived paths inside output_dir.
    std::filesystem::path dataset_path() const { return output_dir / "dataset.tsds"; }
    std::filesystem::path checkpoint_path() const { return output_dir / "model.tsfm"; }
    std::filesystem::path training_log_path() const { return output_dir / "training_log.csv"; }
    std::filesystem::path train_summary_path() const { return output_dir / "train_summary.json"; }
    std::filesystem::path prepare_summary_path() const {
        return output_dir / "prepare_summary.json";
    }
    std::filesystem::path attack_dir() const { return output_dir / "attacks"; }
    std::filesystem::path eval_dir() const { return output_dir / "eval"; }
    std::filesystem::path report_path() const { return output_dir / "report.md"; }
    std::filesystem::path attack_basename(const std::string& target, AttackMethod method,
                                          double epsilon) const;
};

} // namespace tsadv
