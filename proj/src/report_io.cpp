#include "tsadv/report_io.hpp"

#include <sstream>

namespace tsadv {

using nlohmann::json;

namespace {

json target_spec_to_json(const AttackTargetSpec& spec) {
    return json{{"kind", spec.name()},
                {"direction", spec.direction},
                {"tau", spec.tau},
                {"t1", spec.t1},
                {"t2", spec.t2},
                {"lim", spec.lim == LimSemantics::upper_clip ? "upper_clip" : "magnitude_clamp"}};
}

AttackTargetSpec target_spec_from_json(const json& j) {
    AttackTargetSpec spec = target_spec_from_name(j.at("kind").get<std::string>());
    spec.direction = j.at("direction").get<int>();
    spec.tau = j.at("tau").get<double>();
    spec.t1 = j.at("t1").get<std::size_t>();
    spec.t2 = j.at("t2").get<std::size_t>();
    spec.lim = j.at("lim").get<std::string>() == "magnitude_clamp" ? LimSemantics::magnitude_clamp
                                                                   : LimSemantics::upper_clip;
    return spec;
}

} // namespace

json attack_result_to_json(const AttackResult& result, std::uint64_t seed) {
    json windows = json::array();
    for (const auto& w : result.windows) {
        json entry{{"index", w.index},
                   {"clean_pred", w.clean_pred},
                   {"adv_pred", w.adv_pred},
                   {"target", w.target_value},
                   {"truth", w.truth},
                   {"final_loss", w.final_loss},
                   {"linf", w.linf},
                   {"l2", w.l2},
                   {"halvings", w.halvings},
                   {"skipped", w.skipped}};
        if (!w.loss_trace.empty()) entry["loss_trace"] = w.loss_trace;
        if (!w.halving_iters.empty()) entry["halving_iters"] = w.halving_iters;
        windows.push_back(std::move(entry));
    }

    json errors = json::array();
    for (const auto& e : result.errors)
        errors.push_back(json{{"index", e.index}, {"message", e.message}});

    const AttackConfig& c = result.config;
    return json{{"schema_version", 1},
                {"method", to_string(c.method)},
                {"mode", result.untargeted ? "untargeted" : "targeted"},
                {"epsilon", c.epsilon},
                {"seed", seed},
                {"target", target_spec_to_json(result.target_spec)},
                {"attack_config",
                 {{"n_iter", c.n_iter},
                  {"step", c.step},
                  {"momentum_alpha", c.momentum_alpha},
                  {"rho", c.rho},
                  {"grad_mode", to_string(c.grad_mode)},
                  {"clip_lo", c.clip_lo},
                  {"clip_hi", c.clip_hi}}},
                {"windows", std::move(windows)},
                {"errors", std::move(errors)}};
}

AttackResult attack_result_from_json(const json& j) {
    if (j.at("schema_version").get<int>() != 1)
        throw DataError("unsupported attack result schema_version");

    AttackResult result;
    result.untargeted = j.at("mode").get<std::string>() == "untargeted";
    result.target_spec = target_spec_from_json(j.at("target"));

    AttackConfig& c = result.config;
    c.method = attack_method_from_string(j.at("method").get<std::string>());
    c.mode = result.untargeted ? AttackMode::untargeted : AttackMode::targeted;
    c.epsilon = j.at("epsilon").get<double>();
    const json& ac = j.at("attack_config");
    c.n_iter = ac.at("n_iter").get<std::size_t>();
    c.step = ac.at("step").get<double>();
    c.momentum_alpha = ac.at("momentum_alpha").get<double>();
    c.rho = ac.at("rho").get<double>();
    c.grad_mode = grad_mode_from_string(ac.at("grad_mode").get<std::string>());
    c.clip_lo = ac.at("clip_lo").get<double>();
    c.clip_hi = ac.at("clip_hi").get<double>();

    for (const json& e : j.at("windows")) {
        WindowAttack w;
        w.index = e.at("index").get<std::size_t>();
        w.clean_pred = e.at("clean_pred").get<double>();
        w.adv_pred = e.at("adv_pred").get<double>();
        w.target_value = e.at("target").get<double>();
        w.truth = e.at("truth").get<double>();
        w.final_loss = e.at("final_loss").get<double>();
        w.linf = e.at("linf").get<double>();
        w.l2 = e.at("l2").get<double>();
        w.halvings = e.at("halvings").get<std::size_t>();
        w.skipped = e.at("skipped").get<bool>();
        if (e.contains("loss_trace")) w.loss_trace = e.at("loss_trace").get<std::vector<double>>();
        if (e.contains("halving_iters"))
            w.halving_iters = e.at("halving_iters").get<std::vector<std::size_t>>();
        result.windows.push_back(std::move(w));
    }
    for (const json& e : j.at("errors"))
        result.errors.push_back(
            {e.at("index").get<std::size_t>(), e.at("message").get<std::string>()});
    return result;
}

AttackResult load_attack_result(const std::filesystem::path& path) {
    json j = json::parse(read_file(path));
    return attack_result_from_json(j);
}

std::string attack_result_to_csv(const AttackResult& result) {
    std::ostringstream out;
    out << "window_index,clean_pred,adv_pred,target,linf_dist,l2_dist,final_loss\n";
    for (const auto& w : result.windows)
        out << w.index << ',' << fmt_double(w.clean_pred) << ',' << fmt_double(w.adv_pred) << ','
            << fmt_double(w.target_value) << ',' << fmt_double(w.linf) << ',' << fmt_double(w.l2)
            << ',' << fmt_double(w.final_loss) << '\n';
    return out.str();
}

std::string training_log_to_csv(const TrainLog& log) {
    std::ostringstream out;
    out << "epoch,train_rmse,val_rmse,early_stop\n";
    for (const auto& e : log.epochs)
        out << e.epoch << ',' << fmt_double(e.train_rmse) << ',' << fmt_double(e.val_rmse) << ','
            << (e.early_stop ? 1 : 0) << '\n';
    return out.str();
}

json ks_report_to_json(const KSReport& report) {
    auto pair = [](const KSPair& p) {
        return json{{"d", p.d}, {"p", p.p}, {"n", p.n}, {"m", p.m}};
    };
    return json{{"group_size", report.group_size},
                {"orig_targeted", pair(report.orig_targeted)},
                {"orig_untargeted", pair(report.orig_untargeted)},
                {"targeted_untargeted", pair(report.targeted_untargeted)}};
}

std::string histogram_to_csv(const Histogram& hist) {
    std::ostringstream out;
    out << "bin_left,bin_right,count_original,count_targeted,count_untargeted\n";
    for (std::size_t b = 0; b + 1 < hist.edges.size(); ++b) {
        out << fmt_double(hist.edges[b]) << ',' << fmt_double(hist.edges[b + 1]);
        for (const auto& row : hist.counts) out << ',' << row[b];
        out << '\n';
    }
    return out.str();
}

json sweep_curves_to_json(const std::vector<SweepCurve>& curves) {
    json arr = json::array();
    for (const auto& c : curves) {
        json points = json::array();
        for (const auto& p : c.points)
            points.push_back(json{{"epsilon", p.epsilon},
                                  {"output_rmse", p.output_rmse},
                                  {"mean_input_l2", p.mean_input_l2}});
        arr.push_back(json{{"method", to_string(c.method)}, {"points", std::move(points)}});
    }
    return arr;
}

std::string sweep_curves_to_csv(const std::vector<SweepCurve>& curves) {
    std::ostringstream out;
    out << "method,epsilon,output_rmse,mean_input_l2\n";
    for (const auto& c : curves)
        for (const auto& p : c.points)
            out << to_string(c.method) << ',' << fmt_double(p.epsilon) << ','
                << fmt_double(p.output_rmse) << ',' << fmt_double(p.mean_input_l2) << '\n';
    return out.str();
}

} // namespace tsadv
