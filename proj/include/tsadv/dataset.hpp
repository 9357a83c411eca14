#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tsadv/tensor.hpp"

namespace tsadv {

/// Multivariate series after CSV cleaning: strictly increasing timestamps
/// (epoch seconds), T x F feature matrix, no missing values.
struct RawSeries {
    std::vector<std::int64_t> timestamps;
    std::vector<double> values; // row-major T x F
    std::size_t num_features = 0;
    std::vector<std::string> feature_names;
    std::size_t target_feature = 0;

    std::size_t rows() const { return timestamps.size(); }
    double at(std::size_t row, std::size_t col) const { return values[row * num_features + col]; }
    double& at(std::size_t row, std::size_t col) { return values[row * num_features + col]; }
};

struct CsvSchema {
    std::string timestamp_column;
    std::string timestamp_format = "%Y-%m-%d %H:%M:%S";
    std::vector<std::string> feature_columns;
    std::string target_column;
    char separator = ',';
};

struct LoadReport {
    std::size_t rows_kept = 0;
    std::size_t rows_dropped = 0;
};

/// Parse a headered CSV. Rows with missing or unparseable fields are
/// dropped and counted in the report.
RawSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema,
                   LoadReport* report = nullptr);

/// Mean-pool rows into fixed buckets of `bucket_seconds` aligned to the
/// epoch; empty buckets are dropped. Bucket must be at least the native
/// sampling interval.
RawSeries resample_mean(const RawSeries& series, std::int64_t bucket_seconds);

/// Per-feature min/max captured from training rows. Constant features
/// map to 0 by convention; out-of-range values clamp into [0,1].
struct NormalizationMeta {
    std::vector<double> min;
    std::vector<double> max;

    std::size_t features() const { return min.size(); }
    double normalize_value(double v, std::size_t f) const;
    double denormalize_value(double v, std::size_t f) const;
};

/// Fit min/max on the first `fit_rows` rows (0 = all rows).
NormalizationMeta fit_normalization(const RawSeries& series, std::size_t fit_rows = 0);

/// Map every feature into [0,1] with the given statistics, clamping
/// values that fall outside the fitted range.
RawSeries apply_normalization(const RawSeries& series, const NormalizationMeta& meta);

struct WindowSample {
    Tensor window;      // window_size x num_features
    double target;      // next value of the target feature
    std::size_t origin; // index of the window's first row in the source series
};

struct WindowedDataset {
    std::vector<WindowSample> samples;
    std::size_t window_size = 0;
    std::size_t num_features = 0;
    NormalizationMeta normalization;

    std::size_t size() const { return samples.size(); }
};

/// Stride-1 sliding windows: sample i covers rows [i, i+w) and targets
/// row i+w. Requires rows() > w; yields rows() - w samples.
WindowedDataset make_windows(const RawSeries& series, std::size_t window_size);

/// First floor(fraction * N) samples train, remainder test; no shuffling.
std::pair<WindowedDataset, WindowedDataset> chrono_split(const WindowedDataset& dataset,
                                                         double train_fraction);

enum class SynthKind { sine_trend, ar1, mixture };

SynthKind synth_kind_from_string(const std::string& s);
std::string to_string(SynthKind k);

/// Deterministic synthetic series used in place of external datasets.
///
/// Target feature (index 0), before noise:
///   sine_trend: 0.5 + 0.25*sin(2*pi*t/period) + trend*t
///   ar1:        0.5 + u_t where u_t = phi*u_{t-1} + noise_sigma*e_t, u_0 = 0
///   mixture:    0.5 + 0.2*sin(2*pi*t/period) + 0.1*sin(2*pi*t/(period/3.7) + 1)
///               + AR(1) noise as above
/// sine_trend and mixture add noise_sigma*e_t on top; e_t ~ N(0,1).
/// Feature j >= 1 is a damped copy of the target with its own noise:
///   0.5 + 0.8^j * (x_t - 0.5) + 0.02*e'_t.
struct SynthSpec {
    SynthKind kind = SynthKind::ar1;
    std::size_t length = 2000;
    std::size_t features = 1;
    double noise_sigma = 0.0;
    double phi = 0.8;      // ar1 / mixture
    double period = 50.0;  // sine_trend / mixture
    double trend = 0.0;    // sine_trend
    std::uint64_t seed = 0;
    std::int64_t start_timestamp = 0;
    std::int64_t step_seconds = 3600;
};

RawSeries synth_series(const SynthSpec& spec);

/// Versioned binary container for a prepared train/test pair.
void save_dataset(const std::filesystem::path& path, const WindowedDataset& train,
                  const WindowedDataset& test);
std::pair<WindowedDataset, WindowedDataset> load_dataset(const std::filesystem::path& path);

} // namespace tsadv
