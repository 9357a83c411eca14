#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tsadv/dataset.hpp"
#include "tsadv/model.hpp"
#include "tsadv/target.hpp"

namespace tsadv {

enum class AttackMethod { fgsm, pgd, mapgd };
enum class AttackMode { targeted, untargeted };
/// Step form for the iterative attacks: sign(grad) with a fixed step
/// length (default), or the raw gradient scaled by the step length.
enum class GradMode { sign, raw };
enum class Exec { serial, parallel };

AttackMethod attack_method_from_string(const std::string& s);
std::string to_string(AttackMethod m);
GradMode grad_mode_from_string(const std::string& s);
std::string to_string(GradMode m);

struct AttackConfig {
    AttackMethod method = AttackMethod::pgd;
    AttackMode mode = AttackMode::targeted;
    double epsilon = 0.1;   // L-inf budget in normalized units; 0 = control run
    std::size_t n_iter = 40;
    /// Step length; 0 selects the default: epsilon for FGSM, epsilon/10
    /// for PGD, 2*epsilon initial for mAPGD.
    double step = 0.0;
    double momentum_alpha = 0.75;
    double rho = 0.75;
    /// mAPGD checkpoint iterations; empty selects the standard schedule
    /// from apgd_checkpoints().
    std::vector<std::size_t> checkpoints;
    GradMode grad_mode = GradMode::sign;
    double clip_lo = 0.0;
    double clip_hi = 1.0;
    bool record_trace = false;

    double effective_step() const;
    void validate() const;
};

/// Checkpoint schedule w_j = ceil(p_j * n_iter) with p_0 = 0, p_1 = 0.22,
/// p_{j+1} = p_j + max(p_j - p_{j-1} - 0.03, 0.06); deduplicated,
/// restricted to [1, n_iter].
std::vector<std::size_t> apgd_checkpoints(std::size_t n_iter);

/// Outcome of attacking one window.
struct WindowAttack {
    std::size_t index = 0; // forecast index within the attacked dataset
    Tensor x_adv;
    double clean_pred = 0.0;
    double adv_pred = 0.0;
    double target_value = 0.0; // y' (targeted) or ascent reference (untargeted)
    double truth = 0.0;        // ground-truth next value
    double final_loss = 0.0;   // (adv_pred - target_value)^2
    double linf = 0.0;
    double l2 = 0.0;
    std::size_t halvings = 0;
    bool skipped = false;
    std::vector<double> loss_trace;         // per-iterate loss, when recorded
    /// Running best of the internal objective (loss, negated on ascent
    /// runs); non-increasing by construction. Recorded with loss_trace.
    std::vector<double> best_obj_trace;
    std::vector<std::size_t> halving_iters; // iterations where the step halved
};

struct AttackResult {
    AttackConfig config;
    AttackTargetSpec target_spec;
    bool untargeted = false;
    std::vector<WindowAttack> windows;

    struct WindowError {
        std::size_t index;
        std::string message;
    };
    std::vector<WindowError> errors;
};

/// Loss the attacks optimize: (f(window) - reference)^2.
double prediction_loss(const ForecastModel& model, const Tensor& window, double reference);

/// d(prediction_loss)/d(window); optionally returns loss and prediction
/// from the same forward pass. Throws NumericError on a non-finite
/// gradient.
Tensor prediction_loss_gradient(const ForecastModel& model, const Tensor& window,
                                double reference, double* loss_out = nullptr,
                                double* pred_out = nullptr);

/// Componentwise projection onto the eps-ball around x0 intersected with
/// the valid input range.
Tensor project_ball(const Tensor& x, const Tensor& x0, double eps, double lo, double hi);

// Single-window attacks. `reference` is the per-window target y'
// (targeted) or the value whose loss is ascended (untargeted).
WindowAttack fgsm_attack(const ForecastModel& model, const Tensor& x0, double reference,
                         const AttackConfig& cfg);
WindowAttack pgd_attack(const ForecastModel& model, const Tensor& x0, double reference,
                        const AttackConfig& cfg);
WindowAttack mapgd_attack(const ForecastModel& model, const Tensor& x0, double reference,
                          const AttackConfig& cfg);
WindowAttack attack_window(const ForecastModel& model, const Tensor& x0, double reference,
                           const AttackConfig& cfg);

/// Attack every window of a dataset. Builds clean predictions, builds the
/// target sequence (ground-truth references in untargeted mode), then
/// runs the configured method independently per window. Windows whose
/// target equals the clean prediction bitwise are left unattacked.
/// Per-window failures are collected, not fatal.
///
/// The parallel path fans out across windows with OpenMP; the serial path
/// is the reference implementation and produces bit-identical results.
AttackResult attack_dataset(const ForecastModel& model, const WindowedDataset& data,
                            const AttackTargetSpec& spec, const AttackConfig& cfg,
                            Exec exec = Exec::parallel);

} // namespace tsadv
