#include "tsadv/attack.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tsadv {

AttackMethod attack_method_from_string(const std::string& s) {
    if (s == "fgsm") return AttackMethod::fgsm;
    if (s == "pgd") return AttackMethod::pgd;
    if (s == "mapgd") return AttackMethod::mapgd;
    throw ConfigError("unknown attack method '" + s + "'");
}

std::string to_string(AttackMethod m) {
    switch (m) {
    case AttackMethod::fgsm: return "fgsm";
    case AttackMethod::pgd: return "pgd";
    case AttackMethod::mapgd: return "mapgd";
    }
    return "?";
}

GradMode grad_mode_from_string(const std::string& s) {
    if (s == "sign") return GradMode::sign;
    if (s == "raw") return GradMode::raw;
    throw ConfigError("unknown gradient mode '" + s + "'");
}

std::string to_string(GradMode m) { return m == GradMode::sign ? "sign" : "raw"; }

double AttackConfig::effective_step() const {
    if (step > 0.0) return step;
    switch (method) {
    case AttackMethod::fgsm: return epsilon;
    case AttackMethod::pgd: return epsilon / 10.0;
    case AttackMethod::mapgd: return 2.0 * epsilon;
    }
    return epsilon;
}

void AttackConfig::validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
        throw ConfigError("epsilon must be non-negative and finite");
    if (n_iter < 1) throw ConfigError("n_iter must be >= 1");
    if (!(momentum_alpha > 0.0 && momentum_alpha < 1.0))
        throw ConfigError("momentum alpha must be in (0,1)");
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho must be in (0,1)");
    if (!(clip_lo < clip_hi)) throw ConfigError("clip range is empty");
    if (step < 0.0) throw ConfigError("step must be non-negative (0 = default)");
}

std::vector<std::size_t> apgd_checkpoints(std::size_t n_iter) {
    std::vector<std::size_t> w;
    double p_prev = 0.0, p = 0.22;
    while (p <= 1.0) {
        auto ckpt = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n_iter)));
        if (ckpt >= 1 && ckpt <= n_iter && (w.empty() || ckpt > w.back())) w.push_back(ckpt);
        double p_next = p + std::max(p - p_prev - 0.03, 0.06);
        p_prev = p;
        p = p_next;
    }
    return w;
}

double prediction_loss(const ForecastModel& model, const Tensor& window, double reference) {
    double pred = model.predict(window);
    double d = pred - reference;
    return d * d;
}

Tensor prediction_loss_gradient(const ForecastModel& model, const Tensor& window,
                                double reference, double* loss_out, double* pred_out) {
    Tape tape;
    Var x = tape.leaf(window, /*requires_grad=*/true);
    Var pred = model.forward(tape, x);
    Var loss = tape.mse_loss(pred, tape.constant(reference));
    if (pred_out) *pred_out = tape.value(pred).value();
    if (loss_out) *loss_out = tape.value(loss).value();
    Tensor grad = tape.backward(loss).at(x);
    if (!grad.finite()) throw NumericError("non-finite input gradient");
    return grad;
}

Tensor project_ball(const Tensor& x, const Tensor& x0, double eps, double lo, double hi) {
    Tensor out = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double l = std::max(lo, x0.data[i] - eps);
        double h = std::min(hi, x0.data[i] + eps);
        out.data[i] = std::clamp(out.data[i], l, h);
    }
    return out;
}

namespace {

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Objective the engine always descends: the loss toward the target when
// targeted, its negation when untargeted (ascent).
double signed_obj(double loss, AttackMode mode) {
    return mode == AttackMode::targeted ? loss : -loss;
}

// One descent step on the objective from x along grad(loss).
Tensor descend(const Tensor& x, const Tensor& loss_grad, double eta, AttackMode mode,
               GradMode gm) {
    double dir = mode == AttackMode::targeted ? 1.0 : -1.0; // descend obj = dir * loss
    Tensor out = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double g = dir * loss_grad.data[i];
        out.data[i] -= eta * (gm == GradMode::sign ? sgn(g) : g);
    }
    return out;
}

void finalize(WindowAttack& wa, const Tensor& x0, const AttackConfig& cfg) {
    double linf = 0.0, l2 = 0.0;
    for (std::size_t i = 0; i < x0.size(); ++i) {
        double d = wa.x_adv.data[i] - x0.data[i];
        linf = std::max(linf, std::abs(d));
        l2 += d * d;
    }
    wa.linf = linf;
    wa.l2 = std::sqrt(l2);
    if (linf > cfg.epsilon + 1e-9)
        throw NumericError("epsilon-ball violated: " + fmt_double(linf) + " > " +
                           fmt_double(cfg.epsilon));
    for (double v : wa.x_adv.data)
        if (v < cfg.clip_lo - 1e-12 || v > cfg.clip_hi + 1e-12)
            throw NumericError("adversarial input escaped the clip range");
}

} // namespace

WindowAttack fgsm_attack(const ForecastModel& model, const Tensor& x0, double reference,
                         const AttackConfig& cfg) {
    cfg.validate();
    WindowAttack wa;
    double loss0 = 0.0;
    Tensor grad = prediction_loss_gradient(model, x0, reference, &loss0, &wa.clean_pred);
    // FGSM is a sign step by definition, whatever the iterative mode is.
    wa.x_adv = descend(x0, grad, cfg.epsilon, cfg.mode, GradMode::sign);
    wa.x_adv = project_ball(wa.x_adv, x0, cfg.epsilon, cfg.clip_lo, cfg.clip_hi);
    wa.adv_pred = model.predict(wa.x_adv);
    double d = wa.adv_pred - reference;
    wa.final_loss = d * d;
    wa.target_value = reference;
    if (cfg.record_trace) wa.loss_trace = {loss0, wa.final_loss};
    finalize(wa, x0, cfg);
    return wa;
}

WindowAttack pgd_attack(const ForecastModel& model, const Tensor& x0, double reference,
                        const AttackConfig& cfg) {
    cfg.validate();
    const double eta = cfg.effective_step();

    WindowAttack wa;
    wa.target_value = reference;

    double loss = 0.0;
    Tensor grad = prediction_loss_gradient(model, x0, reference, &loss, &wa.clean_pred);
    if (cfg.record_trace) wa.loss_trace.push_back(loss);

    Tensor x = x0;
    double best_obj = std::numeric_limits<double>::infinity();
    // Best over the iterates x^1..x^n; the start point is not a candidate.
    for (std::size_t n = 1; n <= cfg.n_iter; ++n) {
        x = project_ball(descend(x, grad, eta, cfg.mode, cfg.grad_mode), x0, cfg.epsilon,
                         cfg.clip_lo, cfg.clip_hi);
        double pred = 0.0;
        Tensor next_grad;
        if (n < cfg.n_iter) {
            try {
                next_grad = prediction_loss_gradient(model, x, reference, &loss, &pred);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " at iteration " + std::to_string(n));
            }
        } else {
            pred = model.predict(x);
            double d = pred - reference;
            loss = d * d;
        }
        if (cfg.record_trace) wa.loss_trace.push_back(loss);
        double obj = signed_obj(loss, cfg.mode);
        if (obj < best_obj) {
            best_obj = obj;
            wa.x_adv = x;
            wa.adv_pred = pred;
            wa.final_loss = loss;
        }
        if (cfg.record_trace) wa.best_obj_trace.push_back(best_obj);
        grad = std::move(next_grad);
    }
    finalize(wa, x0, cfg);
    return wa;
}

WindowAttack mapgd_attack(const ForecastModel& model, const Tensor& x0, double reference,
                          const AttackConfig& cfg) {
    cfg.validate();
    std::vector<std::size_t> ckpts = cfg.checkpoints.empty() ? apgd_checkpoints(cfg.n_iter)
                                                             : cfg.checkpoints;
    for (std::size_t j = 0; j < ckpts.size(); ++j)
        if (ckpts[j] < 1 || ckpts[j] > cfg.n_iter || (j > 0 && ckpts[j] <= ckpts[j - 1]))
            throw ConfigError("invalid checkpoint schedule: entries must be strictly increasing "
                              "within [1, n_iter]");

    double eta = cfg.effective_step();
    const double alpha = cfg.momentum_alpha;

    WindowAttack wa;
    wa.target_value = reference;

    auto eval = [&](const Tensor& x, double& pred) {
        pred = model.predict(x);
        double d = pred - reference;
        return signed_obj(d * d, cfg.mode);
    };

    // Initialization: one-step PGD from x^(0); the running best starts at
    // the better of x^(0) and x^(1).
    double loss0 = 0.0;
    Tensor grad = prediction_loss_gradient(model, x0, reference, &loss0, &wa.clean_pred);
    double obj0 = signed_obj(loss0, cfg.mode);
    Tensor x1 = project_ball(descend(x0, grad, eta, cfg.mode, cfg.grad_mode), x0, cfg.epsilon,
                             cfg.clip_lo, cfg.clip_hi);
    double pred1 = 0.0;
    double obj1 = eval(x1, pred1);

    Tensor x_min;
    double obj_min, pred_min;
    if (obj0 < obj1) {
        x_min = x0;
        obj_min = obj0;
        pred_min = wa.clean_pred;
    } else {
        x_min = x1;
        obj_min = obj1;
        pred_min = pred1;
    }

    if (cfg.record_trace) {
        wa.loss_trace.push_back(std::abs(obj0));
        wa.loss_trace.push_back(std::abs(obj1));
        wa.best_obj_trace.push_back(obj_min);
    }

    std::vector<bool> improved;
    improved.push_back(obj1 < obj0);

    Tensor x_prev = x0;
    Tensor x_cur = std::move(x1);
    double obj_cur = obj1;

    std::size_t next_ckpt = 0;
    std::size_t prev_ckpt_iter = 0;
    double eta_at_prev_ckpt = eta;
    double obj_min_at_prev_ckpt = obj_min;

    for (std::size_t n = 1; n + 1 <= cfg.n_iter; ++n) {
        try {
            grad = prediction_loss_gradient(model, x_cur, reference);
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " at iteration " + std::to_string(n));
        }
        Tensor z = project_ball(descend(x_cur, grad, eta, cfg.mode, cfg.grad_mode), x0,
                                cfg.epsilon, cfg.clip_lo, cfg.clip_hi);
        Tensor x_next(x_cur.shape);
        for (std::size_t i = 0; i < x_cur.size(); ++i)
            x_next.data[i] = x_cur.data[i] + alpha * (z.data[i] - x_cur.data[i]) +
                             (1.0 - alpha) * (x_cur.data[i] - x_prev.data[i]);
        x_next = project_ball(x_next, x0, cfg.epsilon, cfg.clip_lo, cfg.clip_hi);

        double pred_next = 0.0;
        double obj_next = eval(x_next, pred_next);
        if (cfg.record_trace) wa.loss_trace.push_back(std::abs(obj_next));
        improved.push_back(obj_next < obj_cur);
        if (obj_next < obj_min) {
            obj_min = obj_next;
            x_min = x_next;
            pred_min = pred_next;
        }
        if (cfg.record_trace) wa.best_obj_trace.push_back(obj_min);

        while (next_ckpt < ckpts.size() && ckpts[next_ckpt] < n) ++next_ckpt;
        if (next_ckpt < ckpts.size() && ckpts[next_ckpt] == n) {
            std::size_t improving = 0;
            for (std::size_t i = prev_ckpt_iter; i < n; ++i) improving += improved[i] ? 1 : 0;
            bool cond1 = static_cast<double>(improving) <
                         cfg.rho * static_cast<double>(n - prev_ckpt_iter);
            bool cond2 = eta == eta_at_prev_ckpt && obj_min == obj_min_at_prev_ckpt;
            eta_at_prev_ckpt = eta;
            obj_min_at_prev_ckpt = obj_min;
            prev_ckpt_iter = n;
            ++next_ckpt;
            if (cond1 || cond2) {
                eta /= 2.0;
                ++wa.halvings;
                wa.halving_iters.push_back(n);
                x_next = x_min;
                obj_next = obj_min;
            }
        }

        x_prev = std::move(x_cur);
        x_cur = std::move(x_next);
        obj_cur = obj_next;
    }

    wa.x_adv = std::move(x_min);
    wa.adv_pred = pred_min;
    wa.final_loss = std::abs(obj_min);
    finalize(wa, x0, cfg);
    return wa;
}

WindowAttack attack_window(const ForecastModel& model, const Tensor& x0, double reference,
                           const AttackConfig& cfg) {
    switch (cfg.method) {
    case AttackMethod::fgsm: return fgsm_attack(model, x0, reference, cfg);
    case AttackMethod::pgd: return pgd_attack(model, x0, reference, cfg);
    case AttackMethod::mapgd: return mapgd_attack(model, x0, reference, cfg);
    }
    throw std::logic_error("unreachable attack method");
}

namespace {

WindowAttack passthrough_entry(const Tensor& x0, double clean_pred, double reference) {
    WindowAttack wa;
    wa.x_adv = x0;
    wa.clean_pred = clean_pred;
    wa.adv_pred = clean_pred;
    wa.target_value = reference;
    double d = clean_pred - reference;
    wa.final_loss = d * d;
    wa.skipped = true;
    return wa;
}

} // namespace

AttackResult attack_dataset(const ForecastModel& model, const WindowedDataset& data,
                            const AttackTargetSpec& spec, const AttackConfig& cfg,
                            Exec exec) {
    if (data.size() == 0) throw DataError("cannot attack an empty dataset");
    cfg.validate();
    spec.validate(data.size());

    const auto n = static_cast<std::int64_t>(data.size());
    std::vector<double> clean(data.size());
    std::vector<std::string> errors(data.size());

    const bool par = exec == Exec::parallel;
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            clean[static_cast<std::size_t>(i)] =
                model.predict(data.samples[static_cast<std::size_t>(i)].window);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(i)] = e.what();
        }
    }
    for (std::size_t i = 0; i < data.size(); ++i)
        if (!errors[i].empty())
            throw NumericError("clean prediction failed at window " + std::to_string(i) + ": " +
                               errors[i]);

    TargetSequence targets;
    if (spec.kind == TargetKind::untargeted) {
        // Ascent reference is the true output; the clean prediction is a
        // stationary point of its own loss and the attack could not move.
        std::vector<double> truths(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) truths[i] = data.samples[i].target;
        targets = untargeted_reference(truths);
    } else {
        targets = build_targets(spec, clean);
    }

    AttackConfig wcfg = cfg;
    wcfg.mode = targets.untargeted ? AttackMode::untargeted : AttackMode::targeted;

    AttackResult result;
    result.config = wcfg;
    result.target_spec = spec;
    result.untargeted = targets.untargeted;
    result.windows.resize(data.size());

#pragma omp parallel for schedule(dynamic) if (par)
    for (std::int64_t i = 0; i < n; ++i) {
        auto idx = static_cast<std::size_t>(i);
        const WindowSample& s = data.samples[idx];
        WindowAttack wa;
        try {
            if (!targets.untargeted && targets.values[idx] == clean[idx]) {
                wa = passthrough_entry(s.window, clean[idx], targets.values[idx]);
            } else {
                wa = attack_window(model, s.window, targets.values[idx], wcfg);
            }
        } catch (const std::exception& e) {
            errors[idx] = e.what();
            wa = passthrough_entry(s.window, clean[idx], targets.values[idx]);
        }
        wa.index = idx;
        wa.clean_pred = clean[idx];
        wa.truth = s.target;
        result.windows[idx] = std::move(wa);
    }

    for (std::size_t i = 0; i < data.size(); ++i)
        if (!errors[i].empty()) result.errors.push_back({i, errors[i]});
    return result;
}

} // namespace tsadv
