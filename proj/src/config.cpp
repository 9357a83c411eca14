#include "tsadv/config.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace tsadv {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& section, const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("[" + section + "] " + key + ": expected a number, got '" + v + "'");
    }
}

std::uint64_t parse_uint(const std::string& section, const std::string& key,
                         const std::string& v) {
    try {
        std::size_t pos = 0;
        long long d = std::stoll(v, &pos);
        if (pos != v.size() || d < 0) throw std::invalid_argument(v);
        return static_cast<std::uint64_t>(d);
    } catch (const std::exception&) {
        throw ConfigError("[" + section + "] " + key + ": expected a non-negative integer, got '" +
                          v + "'");
    }
}

bool parse_bool(const std::string& section, const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("[" + section + "] " + key + ": expected true/false, got '" + v + "'");
}

} // namespace

IniFile IniFile::parse(const std::string& text) {
    IniFile ini;
    std::istringstream in(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            ini.sections_[section];
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        ini.sections_[section][key] = value;
    }
    return ini;
}

IniFile IniFile::parse_file(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
    return parse(read_file(path));
}

bool IniFile::has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) != 0;
}

std::string IniFile::get(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return fallback;
    auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    return from_ini(IniFile::parse_file(path));
}

RunConfig RunConfig::from_ini(const IniFile& ini) {
    RunConfig cfg;

    // Every recognized key, per section; anything else is a config error.
    static const std::map<std::string, std::vector<std::string>> known = {
        {"run", {"seed", "output_dir"}},
        {"dataset",
         {"source", "path", "timestamp_column", "timestamp_format", "feature_columns",
          "target_column", "separator", "resample_seconds", "window_size", "train_fraction",
          "synthetic_kind", "synthetic_length", "synthetic_features", "synthetic_noise",
          "synthetic_phi", "synthetic_period", "synthetic_trend", "synthetic_step_seconds"}},
        {"model", {"kind", "hidden_size"}},
        {"train",
         {"epochs", "learning_rate", "batch_size", "patience", "validation_fraction",
          "adam_beta1", "adam_beta2", "adam_eps"}},
        {"attack",
         {"methods", "targets", "epsilons", "n_iter", "step", "momentum_alpha", "rho", "tau",
          "tta_t1", "tta_t2", "grad_mode", "lim_semantics", "record_trace"}},
        {"eval", {"group_size", "bins", "table_epsilon", "sweep_epsilons", "reference"}},
    };
    for (const auto& [section, keys] : ini.sections()) {
        auto it = known.find(section);
        if (it == known.end()) throw ConfigError("unknown config section [" + section + "]");
        for (const auto& [key, value] : keys)
            if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
                throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
    }

    auto str = [&](const std::string& s, const std::string& k, const std::string& d) {
        return ini.get(s, k, d);
    };
    auto num = [&](const std::string& s, const std::string& k, double d) {
        return ini.has(s, k) ? parse_double(s, k, ini.get(s, k, "")) : d;
    };
    auto uns = [&](const std::string& s, const std::string& k, std::uint64_t d) {
        return ini.has(s, k) ? parse_uint(s, k, ini.get(s, k, "")) : d;
    };

    cfg.seed = uns("run", "seed", cfg.seed);
    cfg.output_dir = str("run", "output_dir", cfg.output_dir.string());

    DatasetSection& ds = cfg.dataset;
    ds.source = str("dataset", "source", ds.source);
    if (ds.source != "synthetic" && ds.source != "csv")
        throw ConfigError("[dataset] source must be 'synthetic' or 'csv'");
    ds.path = str("dataset", "path", "");
    ds.schema.timestamp_column = str("dataset", "timestamp_column", "timestamp");
    ds.schema.timestamp_format = str("dataset", "timestamp_format", "%Y-%m-%d %H:%M:%S");
    ds.schema.feature_columns = split_list(str("dataset", "feature_columns", ""));
    ds.schema.target_column = str("dataset", "target_column", "");
    std::string sep = str("dataset", "separator", ",");
    if (sep.size() != 1) throw ConfigError("[dataset] separator must be a single character");
    ds.schema.separator = sep[0];
    ds.resample_seconds = static_cast<std::int64_t>(uns("dataset", "resample_seconds", 0));
    ds.window_size = uns("dataset", "window_size", ds.window_size);
    ds.train_fraction = num("dataset", "train_fraction", ds.train_fraction);
    ds.synth.kind = synth_kind_from_string(str("dataset", "synthetic_kind", "ar1"));
    ds.synth.length = uns("dataset", "synthetic_length", ds.synth.length);
    ds.synth.features = uns("dataset", "synthetic_features", ds.synth.features);
    ds.synth.noise_sigma = num("dataset", "synthetic_noise", ds.synth.noise_sigma);
    ds.synth.phi = num("dataset", "synthetic_phi", ds.synth.phi);
    ds.synth.period = num("dataset", "synthetic_period", ds.synth.period);
    ds.synth.trend = num("dataset", "synthetic_trend", ds.synth.trend);
    ds.synth.step_seconds =
        static_cast<std::int64_t>(uns("dataset", "synthetic_step_seconds", 3600));
    ds.synth.seed = cfg.seed;

    cfg.model.kind = model_kind_from_string(str("model", "kind", "gated_recurrent"));
    cfg.model.hidden = uns("model", "hidden_size", cfg.model.hidden);
    cfg.model.window = ds.window_size;
    cfg.model.seed = cfg.seed + 1;

    cfg.train_cfg.epochs = uns("train", "epochs", cfg.train_cfg.epochs);
    cfg.train_cfg.learning_rate = num("train", "learning_rate", cfg.train_cfg.learning_rate);
    cfg.train_cfg.batch_size = uns("train", "batch_size", cfg.train_cfg.batch_size);
    cfg.train_cfg.patience = uns("train", "patience", cfg.train_cfg.patience);
    cfg.train_cfg.validation_fraction =
        num("train", "validation_fraction", cfg.train_cfg.validation_fraction);
    cfg.train_cfg.beta1 = num("train", "adam_beta1", cfg.train_cfg.beta1);
    cfg.train_cfg.beta2 = num("train", "adam_beta2", cfg.train_cfg.beta2);
    cfg.train_cfg.adam_eps = num("train", "adam_eps", cfg.train_cfg.adam_eps);

    AttackSection& at = cfg.attack;
    if (ini.has("attack", "methods")) {
        at.methods.clear();
        for (const auto& m : split_list(ini.get("attack", "methods", "")))
            at.methods.push_back(attack_method_from_string(m));
    }
    if (ini.has("attack", "targets")) at.targets = split_list(ini.get("attack", "targets", ""));
    if (ini.has("attack", "epsilons")) {
        at.epsilons.clear();
        for (const auto& e : split_list(ini.get("attack", "epsilons", "")))
            at.epsilons.push_back(parse_double("attack", "epsilons", e));
    }
    at.n_iter = uns("attack", "n_iter", at.n_iter);
    at.step = num("attack", "step", at.step);
    at.momentum_alpha = num("attack", "momentum_alpha", at.momentum_alpha);
    at.rho = num("attack", "rho", at.rho);
    at.tau = num("attack", "tau", at.tau);
    at.tta_t1 = uns("attack", "tta_t1", at.tta_t1);
    at.tta_t2 = uns("attack", "tta_t2", at.tta_t2);
    at.grad_mode = grad_mode_from_string(str("attack", "grad_mode", "sign"));
    std::string lim = str("attack", "lim_semantics", "upper_clip");
    if (lim == "upper_clip")
        at.lim = LimSemantics::upper_clip;
    else if (lim == "magnitude_clamp")
        at.lim = LimSemantics::magnitude_clamp;
    else
        throw ConfigError("[attack] lim_semantics must be upper_clip or magnitude_clamp");
    at.record_trace =
        ini.has("attack", "record_trace") && parse_bool("attack", "record_trace",
                                                        ini.get("attack", "record_trace", ""));

    EvalSection& ev = cfg.eval;
    ev.group_size = uns("eval", "group_size", ev.group_size);
    ev.bins = uns("eval", "bins", ev.bins);
    ev.table_epsilon = num("eval", "table_epsilon", ev.table_epsilon);
    if (ini.has("eval", "sweep_epsilons"))
        for (const auto& e : split_list(ini.get("eval", "sweep_epsilons", "")))
            ev.sweep_epsilons.push_back(parse_double("eval", "sweep_epsilons", e));
    ev.reference = str("eval", "reference", ev.reference);
    if (ev.reference != "truth" && ev.reference != "clean")
        throw ConfigError("[eval] reference must be 'truth' or 'clean'");

    cfg.validate();
    return cfg;
}

void RunConfig::validate() const {
    if (dataset.source == "csv") {
        if (dataset.path.empty()) throw ConfigError("[dataset] path is required for csv source");
        if (!std::filesystem::exists(dataset.path))
            throw ConfigError("[dataset] path does not exist: " + dataset.path.string());
        if (dataset.schema.feature_columns.empty())
            throw ConfigError("[dataset] feature_columns is required for csv source");
        if (dataset.schema.target_column.empty())
            throw ConfigError("[dataset] target_column is required for csv source");
    }
    if (dataset.window_size < 1) throw ConfigError("[dataset] window_size must be >= 1");
    if (!(dataset.train_fraction > 0.0 && dataset.train_fraction < 1.0))
        throw ConfigError("[dataset] train_fraction must be in (0,1)");
    model.validate();
    train_cfg.validate();
    if (attack.methods.empty()) throw ConfigError("[attack] methods list is empty");
    if (attack.targets.empty()) throw ConfigError("[attack] targets list is empty");
    if (attack.epsilons.empty()) throw ConfigError("[attack] epsilons list is empty");
    for (double e : attack.epsilons)
        if (!(e >= 0.0)) throw ConfigError("[attack] epsilons must be non-negative");
    for (const auto& t : attack.targets) target_spec(t); // throws on unknown names
    if (eval.group_size < 1) throw ConfigError("[eval] group_size must be >= 1");
    if (eval.bins < 1) throw ConfigError("[eval] bins must be >= 1");
}

AttackTargetSpec RunConfig::target_spec(const std::string& name) const {
    AttackTargetSpec spec = target_spec_from_name(name);
    spec.tau = attack.tau;
    spec.t1 = attack.tta_t1;
    spec.t2 = attack.tta_t2;
    spec.lim = attack.lim;
    return spec;
}

AttackConfig RunConfig::attack_config(AttackMethod method, double epsilon) const {
    AttackConfig cfg;
    cfg.method = method;
    cfg.epsilon = epsilon;
    cfg.n_iter = attack.n_iter;
    cfg.step = attack.step;
    cfg.momentum_alpha = attack.momentum_alpha;
    cfg.rho = attack.rho;
    cfg.grad_mode = attack.grad_mode;
    cfg.record_trace = attack.record_trace;
    return cfg;
}

std::filesystem::path RunConfig::attack_basename(const std::string& target, AttackMethod method,
                                                 double epsilon) const {
    return attack_dir() / (target + "_" + to_string(method) + "_eps" + fmt_double(epsilon));
}

} // namespace tsadv
