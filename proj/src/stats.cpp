#include "tsadv/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tsadv {

std::string to_string(LossLabel l) {
    switch (l) {
    case LossLabel::original: return "original";
    case LossLabel::targeted: return "targeted";
    case LossLabel::untargeted: return "untargeted";
    }
    return "?";
}

LossDistribution grouped_rmse(std::span<const double> pred, std::span<const double> ref,
                              std::size_t group_size, LossLabel label) {
    if (pred.size() != ref.size())
        throw ShapeError("grouped_rmse: sequence lengths " + std::to_string(pred.size()) +
                         " and " + std::to_string(ref.size()) + " differ");
    if (group_size < 1) throw ConfigError("group size must be >= 1");

    LossDistribution dist;
    dist.group_size = group_size;
    dist.label = label;
    std::size_t groups = pred.size() / group_size;
    dist.values.reserve(groups);
    for (std::size_t g = 0; g < groups; ++g) {
        double s = 0.0;
        for (std::size_t i = g * group_size; i < (g + 1) * group_size; ++i) {
            double d = pred[i] - ref[i];
            s += d * d;
        }
        dist.values.push_back(std::sqrt(s / static_cast<double>(group_size)));
    }
    return dist;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw DataError("ks_statistic: empty sample");
    std::vector<double> sa(a.begin(), a.end());
    std::vector<double> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());

    const double na = static_cast<double>(sa.size());
    const double nb = static_cast<double>(sb.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < sa.size() && j < sb.size()) {
        // Consume every copy of the smaller value before comparing CDFs,
        // so ties are handled exactly.
        double x = std::min(sa[i], sb[j]);
        while (i < sa.size() && sa[i] == x) ++i;
        while (j < sb.size() && sb[j] == x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    // Once one sample is exhausted its CDF is 1; the remaining sup is at
    // the exhaustion point, already covered by the last update.
    return d;
}

double kolmogorov_survival(double x) {
    if (!(x > 1e-8)) return 1.0;
    if (x < 1.18) {
        // Equivalent theta-function form of the CDF; the alternating
        // series converges too slowly this close to zero.
        double t = std::exp(-M_PI * M_PI / (8.0 * x * x));
        double cdf = std::sqrt(2.0 * M_PI) / x *
                     (t + std::pow(t, 9.0) + std::pow(t, 25.0) + std::pow(t, 49.0));
        return std::clamp(1.0 - cdf, 0.0, 1.0);
    }
    double u = std::exp(-2.0 * x * x);
    double q = 2.0 * (u - std::pow(u, 4.0) + std::pow(u, 9.0) - std::pow(u, 16.0));
    return std::clamp(q, 0.0, 1.0);
}

double ks_pvalue(double d, std::size_t n, std::size_t m) {
    if (n < 1 || m < 1) throw DataError("ks_pvalue: sample sizes must be >= 1");
    double ne = static_cast<double>(n) * static_cast<double>(m) / static_cast<double>(n + m);
    double sq = std::sqrt(ne);
    return kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d);
}

KSReport ks_table(const LossDistribution& original, const LossDistribution& targeted,
                  const LossDistribution& untargeted) {
    if (original.group_size != targeted.group_size ||
        original.group_size != untargeted.group_size)
        throw ConfigError("ks_table: distributions use different group sizes");
    if (original.values.size() != targeted.values.size() ||
        original.values.size() != untargeted.values.size())
        throw ConfigError("ks_table: distributions cover different index ranges");

    auto pair = [](const LossDistribution& a, const LossDistribution& b) {
        KSPair p;
        p.n = a.values.size();
        p.m = b.values.size();
        p.d = ks_statistic(a.values, b.values);
        p.p = ks_pvalue(p.d, p.n, p.m);
        return p;
    };

    KSReport r;
    r.group_size = original.group_size;
    r.orig_targeted = pair(original, targeted);
    r.orig_untargeted = pair(original, untargeted);
    r.targeted_untargeted = pair(targeted, untargeted);
    return r;
}

std::vector<SweepCurve> sweep(const ForecastModel& model, const WindowedDataset& data,
                              const AttackTargetSpec& spec,
                              const std::vector<AttackMethod>& methods,
                              std::vector<double> epsilons, const AttackConfig& base,
                              bool include_zero_control) {
    if (epsilons.empty()) throw ConfigError("sweep: epsilon list is empty");
    if (include_zero_control &&
        std::find(epsilons.begin(), epsilons.end(), 0.0) == epsilons.end())
        epsilons.insert(epsilons.begin(), 0.0);

    std::vector<SweepCurve> curves;
    for (AttackMethod method : methods) {
        SweepCurve curve;
        curve.method = method;
        for (double eps : epsilons) {
            AttackConfig cfg = base;
            cfg.method = method;
            cfg.epsilon = eps;
            cfg.step = 0.0; // rescale the default step with each epsilon
            AttackResult res = attack_dataset(model, data, spec, cfg);

            SweepPoint pt;
            pt.epsilon = eps;
            double se = 0.0, l2 = 0.0;
            for (const auto& w : res.windows) {
                double d = w.adv_pred - w.clean_pred;
                se += d * d;
                l2 += w.l2;
            }
            pt.output_rmse = std::sqrt(se / static_cast<double>(res.windows.size()));
            pt.mean_input_l2 = l2 / static_cast<double>(res.windows.size());
            curve.points.push_back(pt);
        }
        curves.push_back(std::move(curve));
    }
    return curves;
}

double high_freq_ratio(const Tensor& x0, const Tensor& x_adv) {
    if (!x0.same_shape(x_adv))
        throw ShapeError("high_freq_ratio: shapes " + shape_str(x0.shape) + " and " +
                         shape_str(x_adv.shape) + " differ");
    std::size_t rows = x0.rows();
    std::size_t cols = x0.cols();
    if (rows < 2) return 0.0; // no first differences to compare

    double ratio_sum = 0.0;
    bool flagged = false;
    for (std::size_t f = 0; f < cols; ++f) {
        double clean_e = 0.0, pert_e = 0.0;
        for (std::size_t t = 0; t + 1 < rows; ++t) {
            double dc = x0.at(t + 1, f) - x0.at(t, f);
            double delta_t1 = x_adv.at(t + 1, f) - x0.at(t + 1, f);
            double delta_t0 = x_adv.at(t, f) - x0.at(t, f);
            double dp = delta_t1 - delta_t0;
            clean_e += dc * dc;
            pert_e += dp * dp;
        }
        if (pert_e == 0.0) continue; // contributes a zero ratio
        if (clean_e == 0.0) {
            flagged = true;
            continue;
        }
        ratio_sum += pert_e / clean_e;
    }
    if (flagged) return std::numeric_limits<double>::infinity();
    return ratio_sum / static_cast<double>(cols);
}

Histogram shared_histogram(const std::vector<const LossDistribution*>& dists, std::size_t bins) {
    if (bins < 1) throw ConfigError("histogram needs at least one bin");
    if (dists.empty()) throw ConfigError("histogram needs at least one distribution");

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto* d : dists)
        for (double v : d->values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (!std::isfinite(lo)) { // all distributions empty
        lo = 0.0;
        hi = 1.0;
    }
    if (hi <= lo) hi = lo + 1.0; // degenerate single-value range

    Histogram h;
    h.edges.resize(bins + 1);
    double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);

    for (const auto* d : dists) {
        std::vector<std::size_t> counts(bins, 0);
        for (double v : d->values) {
            auto b = static_cast<std::size_t>((v - lo) / width);
            if (b >= bins) b = bins - 1; // right edge of the last bin is inclusive
            ++counts[b];
        }
        h.counts.push_back(std::move(counts));
    }
    return h;
}

} // namespace tsadv
