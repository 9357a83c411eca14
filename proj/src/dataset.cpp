#include "tsadv/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>

namespace tsadv {

namespace {

std::vector<std::string> split_line(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& s, double& out) {
    std::string t = trim(s);
    if (t.empty()) return false;
    const char* begin = t.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end == begin + t.size() && std::isfinite(out);
}

// Days since 1970-01-01 for a civil date (proleptic Gregorian). Avoids
// mktime's dependence on the local timezone.
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097LL + static_cast<std::int64_t>(doe) - 719468;
}

bool parse_timestamp(const std::string& s, const std::string& format, std::int64_t& out) {
    std::string t = trim(s);
    if (format.empty() || format == "unix" || format == "%s") {
        double v;
        if (!parse_number(t, v)) return false;
        out = static_cast<std::int64_t>(v);
        return true;
    }
    std::tm tm{};
    std::istringstream in(t);
    in >> std::get_time(&tm, format.c_str());
    if (in.fail()) return false;
    out = days_from_civil(tm.tm_year + 1900, static_cast<unsigned>(tm.tm_mon + 1),
                          static_cast<unsigned>(tm.tm_mday)) *
              86400LL +
          tm.tm_hour * 3600LL + tm.tm_min * 60LL + tm.tm_sec;
    return true;
}

} // namespace

RawSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema,
                   LoadReport* report) {
    std::ifstream in(path);
    if (!in) throw DataError("missing file: " + path.string());
    if (schema.feature_columns.empty()) throw ConfigError("schema has no feature columns");

    std::string header_line;
    if (!std::getline(in, header_line)) throw DataError("empty file: " + path.string());
    if (!header_line.empty() && header_line.back() == '\r') header_line.pop_back();
    std::vector<std::string> header = split_line(header_line, schema.separator);
    for (auto& h : header) h = trim(h);

    auto column_index = [&](const std::string& name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw DataError("missing required column '" + name + "' in " + path.string());
        return static_cast<std::size_t>(it - header.begin());
    };

    std::size_t ts_col = column_index(schema.timestamp_column);
    std::vector<std::size_t> feat_cols;
    for (const auto& name : schema.feature_columns) feat_cols.push_back(column_index(name));
    auto target_it = std::find(schema.feature_columns.begin(), schema.feature_columns.end(),
                               schema.target_column);
    if (target_it == schema.feature_columns.end())
        throw ConfigError("target column '" + schema.target_column +
                          "' is not one of the feature columns");

    RawSeries series;
    series.num_features = feat_cols.size();
    series.feature_names = schema.feature_columns;
    series.target_feature = static_cast<std::size_t>(target_it - schema.feature_columns.begin());

    std::size_t dropped = 0;
    std::string line;
    std::vector<double> row(feat_cols.size());
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        std::vector<std::string> fields = split_line(line, schema.separator);
        std::size_t max_col = ts_col;
        for (std::size_t c : feat_cols) max_col = std::max(max_col, c);
        bool ok = fields.size() > max_col;
        std::int64_t ts = 0;
        if (ok) ok = parse_timestamp(fields[ts_col], schema.timestamp_format, ts);
        for (std::size_t j = 0; ok && j < feat_cols.size(); ++j)
            ok = parse_number(fields[feat_cols[j]], row[j]);
        if (!ok) {
            ++dropped;
            continue;
        }
        series.timestamps.push_back(ts);
        series.values.insert(series.values.end(), row.begin(), row.end());
    }

    if (series.rows() == 0)
        throw DataError("zero usable rows in " + path.string() + " (dropped " +
                        std::to_string(dropped) + ")");
    for (std::size_t i = 1; i < series.rows(); ++i)
        if (series.timestamps[i] <= series.timestamps[i - 1])
            throw DataError("timestamps not strictly increasing at row " + std::to_string(i) +
                            " of " + path.string());

    if (report) {
        report->rows_kept = series.rows();
        report->rows_dropped = dropped;
    }
    return series;
}

RawSeries resample_mean(const RawSeries& series, std::int64_t bucket_seconds) {
    if (bucket_seconds <= 0) throw ConfigError("resample bucket must be positive");
    std::int64_t native = 0;
    for (std::size_t i = 1; i < series.rows(); ++i)
        native = native == 0 ? series.timestamps[i] - series.timestamps[i - 1]
                             : std::min(native, series.timestamps[i] - series.timestamps[i - 1]);
    if (native > 0 && bucket_seconds < native)
        throw ConfigError("resample bucket " + std::to_string(bucket_seconds) +
                          "s is finer than the native interval " + std::to_string(native) + "s");

    RawSeries out;
    out.num_features = series.num_features;
    out.feature_names = series.feature_names;
    out.target_feature = series.target_feature;

    // Rows are time-ordered, so identical buckets are contiguous.
    std::size_t i = 0;
    std::vector<double> acc(series.num_features);
    while (i < series.rows()) {
        std::int64_t bucket = series.timestamps[i] / bucket_seconds -
                              (series.timestamps[i] % bucket_seconds < 0 ? 1 : 0);
        std::fill(acc.begin(), acc.end(), 0.0);
        std::size_t count = 0;
        while (i < series.rows()) {
            std::int64_t b = series.timestamps[i] / bucket_seconds -
                             (series.timestamps[i] % bucket_seconds < 0 ? 1 : 0);
            if (b != bucket) break;
            for (std::size_t f = 0; f < series.num_features; ++f) acc[f] += series.at(i, f);
            ++count;
            ++i;
        }
        out.timestamps.push_back(bucket * bucket_seconds);
        for (std::size_t f = 0; f < series.num_features; ++f)
            out.values.push_back(acc[f] / static_cast<double>(count));
    }
    return out;
}

double NormalizationMeta::normalize_value(double v, std::size_t f) const {
    double lo = min[f], hi = max[f];
    if (hi <= lo) return 0.0; // constant feature
    double x = (v - lo) / (hi - lo);
    return std::clamp(x, 0.0, 1.0);
}

double NormalizationMeta::denormalize_value(double v, std::size_t f) const {
    return min[f] + v * (max[f] - min[f]);
}

NormalizationMeta fit_normalization(const RawSeries& series, std::size_t fit_rows) {
    if (series.rows() == 0) throw DataError("cannot fit normalization on empty series");
    std::size_t n = fit_rows == 0 ? series.rows() : std::min(fit_rows, series.rows());
    NormalizationMeta meta;
    meta.min.assign(series.num_features, std::numeric_limits<double>::infinity());
    meta.max.assign(series.num_features, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t f = 0; f < series.num_features; ++f) {
            meta.min[f] = std::min(meta.min[f], series.at(i, f));
            meta.max[f] = std::max(meta.max[f], series.at(i, f));
        }
    return meta;
}

RawSeries apply_normalization(const RawSeries& series, const NormalizationMeta& meta) {
    if (meta.features() != series.num_features)
        throw ShapeError("normalization has " + std::to_string(meta.features()) +
                         " features, series has " + std::to_string(series.num_features));
    RawSeries out = series;
    for (std::size_t i = 0; i < series.rows(); ++i)
        for (std::size_t f = 0; f < series.num_features; ++f)
            out.at(i, f) = meta.normalize_value(series.at(i, f), f);
    return out;
}

WindowedDataset make_windows(const RawSeries& series, std::size_t window_size) {
    if (window_size == 0) throw ConfigError("window size must be positive");
    if (series.rows() <= window_size)
        throw DataError("series has " + std::to_string(series.rows()) +
                        " rows; need more than window size " + std::to_string(window_size));
    WindowedDataset ds;
    ds.window_size = window_size;
    ds.num_features = series.num_features;
    std::size_t n = series.rows() - window_size;
    ds.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        WindowSample s;
        s.origin = i;
        s.window = Tensor({window_size, series.num_features});
        for (std::size_t r = 0; r < window_size; ++r)
            for (std::size_t f = 0; f < series.num_features; ++f)
                s.window.at(r, f) = series.at(i + r, f);
        s.target = series.at(i + window_size, series.target_feature);
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

std::pair<WindowedDataset, WindowedDataset> chrono_split(const WindowedDataset& dataset,
                                                         double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("train fraction must be in (0,1), got " + fmt_double(train_fraction));
    std::size_t n_train =
        static_cast<std::size_t>(train_fraction * static_cast<double>(dataset.size()));
    if (n_train == 0 || n_train == dataset.size())
        throw DataError("split " + fmt_double(train_fraction) + " of " +
                        std::to_string(dataset.size()) + " samples leaves one side empty");
    WindowedDataset train, test;
    train.window_size = test.window_size = dataset.window_size;
    train.num_features = test.num_features = dataset.num_features;
    train.normalization = test.normalization = dataset.normalization;
    train.samples.assign(dataset.samples.begin(), dataset.samples.begin() + n_train);
    test.samples.assign(dataset.samples.begin() + n_train, dataset.samples.end());
    return {std::move(train), std::move(test)};
}

SynthKind synth_kind_from_string(const std::string& s) {
    if (s == "sine_trend") return SynthKind::sine_trend;
    if (s == "ar1") return SynthKind::ar1;
    if (s == "mixture") return SynthKind::mixture;
    throw ConfigError("unknown synthetic kind '" + s + "'");
}

std::string to_string(SynthKind k) {
    switch (k) {
    case SynthKind::sine_trend: return "sine_trend";
    case SynthKind::ar1: return "ar1";
    case SynthKind::mixture: return "mixture";
    }
    return "?";
}

RawSeries synth_series(const SynthSpec& spec) {
    if (spec.length == 0) throw ConfigError("synthetic length must be positive");
    if (spec.features == 0) throw ConfigError("synthetic features must be positive");

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<double> target(spec.length);
    double ar_state = 0.0;
    for (std::size_t t = 0; t < spec.length; ++t) {
        double v = 0.5;
        double td = static_cast<double>(t);
        switch (spec.kind) {
        case SynthKind::sine_trend:
            v += 0.25 * std::sin(2.0 * M_PI * td / spec.period) + spec.trend * td +
                 spec.noise_sigma * gauss(rng);
            break;
        case SynthKind::ar1:
            ar_state = spec.phi * ar_state + spec.noise_sigma * gauss(rng);
            v += ar_state;
            break;
        case SynthKind::mixture:
            ar_state = spec.phi * ar_state + spec.noise_sigma * gauss(rng);
            v += 0.2 * std::sin(2.0 * M_PI * td / spec.period) +
                 0.1 * std::sin(2.0 * M_PI * td / (spec.period / 3.7) + 1.0) + ar_state;
            break;
        }
        target[t] = v;
    }

    RawSeries series;
    series.num_features = spec.features;
    series.target_feature = 0;
    for (std::size_t f = 0; f < spec.features; ++f)
        series.feature_names.push_back(f == 0 ? "target" : "aux" + std::to_string(f));
    series.timestamps.resize(spec.length);
    series.values.resize(spec.length * spec.features);
    for (std::size_t t = 0; t < spec.length; ++t) {
        series.timestamps[t] = spec.start_timestamp + static_cast<std::int64_t>(t) * spec.step_seconds;
        series.at(t, 0) = target[t];
        for (std::size_t f = 1; f < spec.features; ++f)
            series.at(t, f) =
                0.5 + std::pow(0.8, static_cast<double>(f)) * (target[t] - 0.5) + 0.02 * gauss(rng);
    }
    return series;
}

// ---------------------------------------------------------------------------
// Binary container. Little-endian host assumed (checked by magic round-trip
// in tests). Layout: magic, version, then both splits back to back.

namespace {

constexpr std::uint32_t kDatasetMagic = 0x54534453; // "TSDS"
constexpr std::uint32_t kDatasetVersion = 1;

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
        if (pos + sizeof(T) > buf.size()) throw DataError("truncated container");
        T v;
        std::memcpy(&v, buf.data() + pos, sizeof v);
        pos += sizeof v;
        return v;
    }
    std::string get_str() {
        auto n = get<std::uint64_t>();
        if (pos + n > buf.size()) throw DataError("truncated container");
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

void put_split(std::string& out, const WindowedDataset& ds) {
    put_u64(out, ds.window_size);
    put_u64(out, ds.num_features);
    put_u64(out, ds.normalization.features());
    for (std::size_t f = 0; f < ds.normalization.features(); ++f) {
        put_f64(out, ds.normalization.min[f]);
        put_f64(out, ds.normalization.max[f]);
    }
    put_u64(out, ds.size());
    for (const auto& s : ds.samples) {
        put_u64(out, s.origin);
        put_f64(out, s.target);
        for (double v : s.window.data) put_f64(out, v);
    }
}

WindowedDataset get_split(Reader& r) {
    WindowedDataset ds;
    ds.window_size = r.get<std::uint64_t>();
    ds.num_features = r.get<std::uint64_t>();
    auto nf = r.get<std::uint64_t>();
    ds.normalization.min.resize(nf);
    ds.normalization.max.resize(nf);
    for (std::size_t f = 0; f < nf; ++f) {
        ds.normalization.min[f] = r.get<double>();
        ds.normalization.max[f] = r.get<double>();
    }
    auto n = r.get<std::uint64_t>();
    ds.samples.resize(n);
    for (auto& s : ds.samples) {
        s.origin = r.get<std::uint64_t>();
        s.target = r.get<double>();
        s.window = Tensor({ds.window_size, ds.num_features});
        for (double& v : s.window.data) v = r.get<double>();
    }
    return ds;
}

} // namespace

void save_dataset(const std::filesystem::path& path, const WindowedDataset& train,
                  const WindowedDataset& test) {
    std::string out;
    put_u64(out, kDatasetMagic);
    put_u64(out, kDatasetVersion);
    put_split(out, train);
    put_split(out, test);
    write_file_atomic(path, out);
}

std::pair<WindowedDataset, WindowedDataset> load_dataset(const std::filesystem::path& path) {
    std::string buf = read_file(path);
    Reader r{buf};
    if (r.get<std::uint64_t>() != kDatasetMagic) throw DataError("not a dataset file: " + path.string());
    if (r.get<std::uint64_t>() != kDatasetVersion)
        throw DataError("unsupported dataset version in " + path.string());
    WindowedDataset train = get_split(r);
    WindowedDataset test = get_split(r);
    return {std::move(train), std::move(test)};
}

} // namespace tsadv
