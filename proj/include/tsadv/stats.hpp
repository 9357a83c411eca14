#pragma once

#include <span>
#include <string>
#include <vector>

#include "tsadv/attack.hpp"

namespace tsadv {

enum class LossLabel { original, targeted, untargeted };

std::string to_string(LossLabel l);

/// RMSE of consecutive groups of forecasts against a reference sequence:
/// the samples fed to the KS tests.
struct LossDistribution {
    std::vector<double> values; // one RMSE per complete group
    std::size_t group_size = 5;
    LossLabel label = LossLabel::original;
};

/// Group j covers indices [j*g, (j+1)*g); a trailing partial group is
/// dropped.
LossDistribution grouped_rmse(std::span<const double> pred, std::span<const double> ref,
                              std::size_t group_size, LossLabel label);

/// Two-sample Kolmogorov-Smirnov statistic D = sup |F_a - F_b| over the
/// empirical CDFs, by the sorted-merge method.
double ks_statistic(std::span<const double> a, std::span<const double> b);

/// Survival function of the limiting Kolmogorov distribution,
/// Q(x) = 2 * sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2).
double kolmogorov_survival(double x);

/// Asymptotic two-sample p-value: Q applied to
/// (sqrt(ne) + 0.12 + 0.11/sqrt(ne)) * D with ne = n*m/(n+m).
double ks_pvalue(double d, std::size_t n, std::size_t m);

struct KSPair {
    double d = 0.0;
    double p = 1.0;
    std::size_t n = 0;
    std::size_t m = 0;
};

/// Pairwise KS statistics between the original, targeted and untargeted
/// loss distributions. Smaller D means the two distributions are closer.
struct KSReport {
    KSPair orig_targeted;
    KSPair orig_untargeted;
    KSPair targeted_untargeted;
    std::size_t group_size = 0;
};

KSReport ks_table(const LossDistribution& original, const LossDistribution& targeted,
                  const LossDistribution& untargeted);

struct SweepPoint {
    double epsilon = 0.0;
    double output_rmse = 0.0;   // adversarial vs clean predictions
    double mean_input_l2 = 0.0; // mean per-window ||x_adv - x0||_2
};

struct SweepCurve {
    AttackMethod method = AttackMethod::fgsm;
    std::vector<SweepPoint> points;
};

/// Run the attack per (method, epsilon) and record the output shift and
/// input cost. epsilon = 0 is prepended as a control when requested.
std::vector<SweepCurve> sweep(const ForecastModel& model, const WindowedDataset& data,
                              const AttackTargetSpec& spec,
                              const std::vector<AttackMethod>& methods,
                              std::vector<double> epsilons, const AttackConfig& base,
                              bool include_zero_control = true);

/// First-difference energy of the perturbation relative to that of the
/// clean window, per feature, averaged. 0 when unperturbed (or for a pure
/// constant offset); +infinity flags a perturbed feature whose clean
/// signal carries no first-difference energy.
double high_freq_ratio(const Tensor& x0, const Tensor& x_adv);

/// Equal-width histogram over the pooled range of several distributions,
/// so all of them share the same bin edges.
struct Histogram {
    std::vector<double> edges;                   // bins+1 edges
    std::vector<std::vector<std::size_t>> counts; // one row per distribution
};

Histogram shared_histogram(const std::vector<const LossDistribution*>& dists, std::size_t bins);

} // namespace tsadv
