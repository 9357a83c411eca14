#include "tsadv/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>

namespace tsadv {

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "linear_ar") return ModelKind::linear_ar;
    if (s == "mlp") return ModelKind::mlp;
    if (s == "gated_recurrent") return ModelKind::gated_recurrent;
    throw ConfigError("unknown model kind '" + s + "'");
}

std::string to_string(ModelKind k) {
    switch (k) {
    case ModelKind::linear_ar: return "linear_ar";
    case ModelKind::mlp: return "mlp";
    case ModelKind::gated_recurrent: return "gated_recurrent";
    }
    return "?";
}

void ModelConfig::validate() const {
    if (window < 1) throw ConfigError("model window must be >= 1");
    if (features < 1) throw ConfigError("model features must be >= 1");
    if (hidden < 1) throw ConfigError("model hidden size must be >= 1");
}

Tensor& ModelParams::find(const std::string& name) {
    for (auto& [n, t] : tensors)
        if (n == name) return t;
    throw std::invalid_argument("no parameter named '" + name + "'");
}

const Tensor& ModelParams::find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return t;
    throw std::invalid_argument("no parameter named '" + name + "'");
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (!(learning_rate > 0)) throw ConfigError("learning rate must be positive");
    if (!(validation_fraction > 0 && validation_fraction < 1))
        throw ConfigError("validation fraction must be in (0,1)");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
}

ModelParams init_params(const ModelConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);

    auto weight = [&](std::vector<std::size_t> shape, std::size_t fan_in) {
        Tensor t(std::move(shape));
        double r = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-r, r);
        for (double& v : t.data) v = u(rng);
        return t;
    };

    ModelParams p;
    std::size_t in = cfg.window * cfg.features;
    switch (cfg.kind) {
    case ModelKind::linear_ar:
        p.tensors.emplace_back("w", weight({in}, in));
        p.tensors.emplace_back("b", Tensor({1}));
        break;
    case ModelKind::mlp:
        p.tensors.emplace_back("W1", weight({cfg.hidden, in}, in));
        p.tensors.emplace_back("b1", Tensor({cfg.hidden}));
        p.tensors.emplace_back("w2", weight({cfg.hidden}, cfg.hidden));
        p.tensors.emplace_back("b2", Tensor({1}));
        break;
    case ModelKind::gated_recurrent:
        for (const char* g : {"Wz", "Wr", "Wh"})
            p.tensors.emplace_back(g, weight({cfg.hidden, cfg.features}, cfg.features));
        for (const char* g : {"Uz", "Ur", "Uh"})
            p.tensors.emplace_back(g, weight({cfg.hidden, cfg.hidden}, cfg.hidden));
        for (const char* g : {"bz", "br", "bh"}) p.tensors.emplace_back(g, Tensor({cfg.hidden}));
        p.tensors.emplace_back("w_out", weight({cfg.hidden}, cfg.hidden));
        p.tensors.emplace_back("b_out", Tensor({1}));
        break;
    }
    return p;
}

ForecastModel::ForecastModel(ModelConfig cfg) : config_(cfg), params_(init_params(cfg)) {}

ForecastModel::ForecastModel(ModelConfig cfg, ModelParams params)
    : config_(cfg), params_(std::move(params)) {
    config_.validate();
}

void ForecastModel::check_window(const Tensor& w) const {
    if (w.rank() != 2 || w.shape[0] != config_.window || w.shape[1] != config_.features)
        throw ShapeError("window shape " + shape_str(w.shape) + " does not match model [" +
                         std::to_string(config_.window) + "x" + std::to_string(config_.features) +
                         "]");
}

Var ForecastModel::forward(Tape& tape, Var window) const {
    std::vector<Var> param_vars;
    param_vars.reserve(params_.tensors.size());
    for (const auto& [name, t] : params_.tensors) param_vars.push_back(tape.leaf(t));
    return forward(tape, param_vars, window);
}

Var ForecastModel::forward(Tape& tape, std::span<const Var> pv, Var window) const {
    check_window(tape.value(window));
    if (pv.size() != params_.tensors.size())
        throw std::invalid_argument("expected " + std::to_string(params_.tensors.size()) +
                                    " parameter vars, got " + std::to_string(pv.size()));

    switch (config_.kind) {
    case ModelKind::linear_ar: {
        Var flat = tape.flatten(window);
        return tape.matmul(pv[0], flat) + pv[1];
    }
    case ModelKind::mlp: {
        Var flat = tape.flatten(window);
        Var h = tape.tanh(tape.matmul(pv[0], flat) + pv[1]);
        return tape.matmul(pv[2], h) + pv[3];
    }
    case ModelKind::gated_recurrent: {
        const Var Wz = pv[0], Wr = pv[1], Wh = pv[2];
        const Var Uz = pv[3], Ur = pv[4], Uh = pv[5];
        const Var bz = pv[6], br = pv[7], bh = pv[8];
        const Var w_out = pv[9], b_out = pv[10];
        Var ones = tape.leaf(Tensor({config_.hidden}, 1.0));
        Var h = tape.leaf(Tensor({config_.hidden}, 0.0));
        for (std::size_t t = 0; t < config_.window; ++t) {
            Var x_t = tape.row(window, t);
            Var z = tape.sigmoid(tape.matmul(Wz, x_t) + tape.matmul(Uz, h) + bz);
            Var r = tape.sigmoid(tape.matmul(Wr, x_t) + tape.matmul(Ur, h) + br);
            Var h_cand = tape.tanh(tape.matmul(Wh, x_t) + tape.matmul(Uh, r * h) + bh);
            h = (ones - z) * h + z * h_cand;
        }
        return tape.matmul(w_out, h) + b_out;
    }
    }
    throw std::logic_error("unreachable model kind");
}

double ForecastModel::predict(const Tensor& window) const {
    Tape tape;
    Var w = tape.leaf(window);
    return tape.value(forward(tape, w)).value();
}

namespace {

struct AdamState {
    std::vector<Tensor> m, v;
    std::size_t t = 0;
};

void adam_step(ModelParams& params, const std::vector<Tensor>& grads, AdamState& st,
               const TrainConfig& cfg) {
    ++st.t;
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
    for (std::size_t p = 0; p < params.tensors.size(); ++p) {
        Tensor& w = params.tensors[p].second;
        const Tensor& g = grads[p];
        Tensor& m = st.m[p];
        Tensor& v = st.v[p];
        for (std::size_t i = 0; i < w.size(); ++i) {
            m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * g.data[i];
            v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * g.data[i] * g.data[i];
            double m_hat = m.data[i] / bc1;
            double v_hat = v.data[i] / bc2;
            w.data[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
        }
    }
}

double dataset_rmse(const ForecastModel& model, const WindowedDataset& data, std::size_t begin,
                    std::size_t end) {
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        double e = model.predict(data.samples[i].window) - data.samples[i].target;
        s += e * e;
    }
    return std::sqrt(s / static_cast<double>(end - begin));
}

} // namespace

TrainLog train(ForecastModel& model, const WindowedDataset& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.size() == 0) throw DataError("cannot train on an empty dataset");

    // Validation tail is time-ordered: no shuffling across the boundary.
    std::size_t n_val = static_cast<std::size_t>(cfg.validation_fraction *
                                                 static_cast<double>(data.size()));
    n_val = std::min(std::max<std::size_t>(n_val, 1), data.size() - 1);
    std::size_t n_fit = data.size() - n_val;

    std::vector<std::size_t> order(n_fit);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(model.config().seed ^ 0x9e3779b97f4a7c15ULL);

    AdamState adam;
    for (const auto& [name, t] : model.params().tensors) {
        adam.m.emplace_back(t.shape);
        adam.v.emplace_back(t.shape);
    }

    TrainLog log;
    ModelParams best = model.params();
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0;
    std::size_t since_improvement = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t start = 0, batch_idx = 0; start < n_fit;
             start += cfg.batch_size, ++batch_idx) {
            std::size_t stop = std::min(start + cfg.batch_size, n_fit);

            Tape tape;
            std::vector<Var> pv;
            pv.reserve(model.params().tensors.size());
            for (const auto& [name, t] : model.params().tensors)
                pv.push_back(tape.leaf(t, /*requires_grad=*/true));

            Var total{};
            for (std::size_t k = start; k < stop; ++k) {
                const WindowSample& s = data.samples[order[k]];
                Var w = tape.leaf(s.window);
                Var pred = model.forward(tape, pv, w);
                Var loss = tape.mse_loss(pred, tape.constant(s.target));
                total = k == start ? loss : total + loss;
            }
            Var batch_loss = tape.scale(total, 1.0 / static_cast<double>(stop - start));
            double loss_value = tape.value(batch_loss).value();
            if (!std::isfinite(loss_value))
                throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batch_idx));

            GradientMap grads = tape.backward(batch_loss);
            std::vector<Tensor> g;
            g.reserve(pv.size());
            for (Var v : pv) g.push_back(grads.at(v));
            adam_step(model.params(), g, adam, cfg);
        }

        EpochStats st;
        st.epoch = epoch;
        st.train_rmse = dataset_rmse(model, data, 0, n_fit);
        st.val_rmse = dataset_rmse(model, data, n_fit, data.size());

        if (st.val_rmse < best_val) {
            best_val = st.val_rmse;
            best = model.params();
            best_epoch = epoch;
            since_improvement = 0;
        } else {
            ++since_improvement;
        }
        st.early_stop = since_improvement >= cfg.patience;
        log.epochs.push_back(st);
        if (st.early_stop) {
            log.early_stopped = true;
            break;
        }
    }

    model.params() = std::move(best);
    log.best_epoch = best_epoch;
    log.best_val_rmse = best_val;
    return log;
}

double rmse(const ForecastModel& model, const WindowedDataset& data) {
    if (data.size() == 0) throw DataError("cannot compute RMSE on an empty dataset");
    return dataset_rmse(model, data, 0, data.size());
}

// ---------------------------------------------------------------------------
// Checkpoint container.

namespace {

constexpr std::uint64_t kCheckpointMagic = 0x5453464d; // "TSFM"
constexpr std::uint64_t kCheckpointVersion = 1;

void put_u64(std::string& out, std::uint64_t v) {
    out.append(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_f64(std::string& out, double v) {
    out.append(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_str(std::string& out, const std::string& s) {
    put_u64(out, s.size());
    out.append(s);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    template <typename T> T get() {
        if (pos + sizeof(T) > buf.size()) throw DataError("truncated checkpoint");
        T v;
        std::memcpy(&v, buf.data() + pos, sizeof v);
        pos += sizeof v;
        return v;
    }
    std::string get_str() {
        auto n = get<std::uint64_t>();
        if (pos + n > buf.size()) throw DataError("truncated checkpoint");
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

} // namespace

void save_checkpoint(const std::filesystem::path& path, const ForecastModel& model,
                     const NormalizationMeta& normalization) {
    std::string out;
    put_u64(out, kCheckpointMagic);
    put_u64(out, kCheckpointVersion);
    put_str(out, to_string(model.config().kind));
    put_u64(out, model.config().window);
    put_u64(out, model.config().features);
    put_u64(out, model.config().hidden);
    put_u64(out, model.config().seed);
    put_u64(out, normalization.features());
    for (std::size_t f = 0; f < normalization.features(); ++f) {
        put_f64(out, normalization.min[f]);
        put_f64(out, normalization.max[f]);
    }
    put_u64(out, model.params().tensors.size());
    for (const auto& [name, t] : model.params().tensors) {
        put_str(out, name);
        put_u64(out, t.rank());
        for (std::size_t d : t.shape) put_u64(out, d);
        for (double v : t.data) put_f64(out, v);
    }
    write_file_atomic(path, out);
}

std::pair<ForecastModel, NormalizationMeta> load_checkpoint(const std::filesystem::path& path) {
    std::string buf = read_file(path);
    Reader r{buf};
    if (r.get<std::uint64_t>() != kCheckpointMagic)
        throw DataError("not a checkpoint file: " + path.string());
    if (r.get<std::uint64_t>() != kCheckpointVersion)
        throw DataError("unsupported checkpoint version in " + path.string());

    ModelConfig cfg;
    cfg.kind = model_kind_from_string(r.get_str());
    cfg.window = r.get<std::uint64_t>();
    cfg.features = r.get<std::uint64_t>();
    cfg.hidden = r.get<std::uint64_t>();
    cfg.seed = r.get<std::uint64_t>();

    NormalizationMeta meta;
    auto nf = r.get<std::uint64_t>();
    meta.min.resize(nf);
    meta.max.resize(nf);
    for (std::size_t f = 0; f < nf; ++f) {
        meta.min[f] = r.get<double>();
        meta.max[f] = r.get<double>();
    }

    ModelParams params;
    auto np = r.get<std::uint64_t>();
    for (std::size_t p = 0; p < np; ++p) {
        std::string name = r.get_str();
        auto rank = r.get<std::uint64_t>();
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = r.get<std::uint64_t>();
        Tensor t(shape);
        for (double& v : t.data) v = r.get<double>();
        params.tensors.emplace_back(std::move(name), std::move(t));
    }
    return {ForecastModel(cfg, std::move(params)), std::move(meta)};
}

} // namespace tsadv
