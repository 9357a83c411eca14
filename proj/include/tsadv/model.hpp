#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tsadv/dataset.hpp"
#include "tsadv/tensor.hpp"

namespace tsadv {

enum class ModelKind { linear_ar, mlp, gated_recurrent };

ModelKind model_kind_from_string(const std::string& s);
std::string to_string(ModelKind k);

struct ModelConfig {
    ModelKind kind = ModelKind::gated_recurrent;
    std::size_t window = 5;
    std::size_t features = 1;
    std::size_t hidden = 32;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Named parameter tensors in a fixed order, so iteration (and therefore
/// training and serialization) is deterministic.
struct ModelParams {
    std::vector<std::pair<std::string, Tensor>> tensors;

    Tensor& find(const std::string& name);
    const Tensor& find(const std::string& name) const;
};

struct TrainConfig {
    std::size_t epochs = 50;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t patience = 5;
    double validation_fraction = 0.1;
    std::size_t batch_size = 32;

    void validate() const;
};

struct EpochStats {
    std::size_t epoch = 0;
    double train_rmse = 0.0;
    double val_rmse = 0.0;
    bool early_stop = false;
};

struct TrainLog {
    std::vector<EpochStats> epochs;
    std::size_t best_epoch = 0;
    double best_val_rmse = 0.0;
    bool early_stopped = false;
};

/// Single-step forecaster f: (window x features) -> next target value.
///
/// Kinds:
///   linear_ar        y = w . flat(x) + b
///   mlp              y = w2 . tanh(W1 flat(x) + b1) + b2
///   gated_recurrent  GRU-style cell over the window rows, linear head on
///                    the final hidden state
class ForecastModel {
public:
    explicit ForecastModel(ModelConfig cfg);               // seeded random init
    ForecastModel(ModelConfig cfg, ModelParams params);    // e.g. from checkpoint

    const ModelConfig& config() const { return config_; }
    const ModelParams& params() const { return params_; }
    ModelParams& params() { return params_; }

    /// Build the forward graph with frozen parameters; the prediction is
    /// differentiable w.r.t. `window satisfies` only. Used by the attacks.
    Var forward(Tape& tape, Var window) const;

    /// Build the forward graph against caller-supplied parameter leaves
    /// (one Var per params() entry, same order). Used by training.
    Var forward(Tape& tape, std::span<const Var> param_vars, Var window) const;

    /// Plain evaluation; same graph, tape discarded.
    double predict(const Tensor& window) const;

private:
    void check_window(const Tensor& w) const;

    ModelConfig config_;
    ModelParams params_;
};

/// Deterministic seeded initialization: weights uniform in
/// +-1/sqrt(fan_in), biases zero.
ModelParams init_params(const ModelConfig& cfg);

/// MSE/Adam training with a time-ordered validation tail and early
/// stopping; returns the log and leaves the best-validation parameters in
/// the model.
TrainLog train(ForecastModel& model, const WindowedDataset& data, const TrainConfig& cfg);

/// Root mean squared error of the model over a dataset (normalized units).
double rmse(const ForecastModel& model, const WindowedDataset& data);

/// Versioned binary checkpoint: config, normalization metadata, parameter
/// tensors. Write/read round-trips bit-exactly.
void save_checkpoint(const std::filesystem::path& path, const ForecastModel& model,
                     const NormalizationMeta& normalization);
std::pair<ForecastModel, NormalizationMeta> load_checkpoint(const std::filesystem::path& path);

} // namespace tsadv
