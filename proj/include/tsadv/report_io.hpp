#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "tsadv/attack.hpp"
#include "tsadv/stats.hpp"

namespace tsadv {

/// JSON form of an attack run (schema_version 1): method, mode, epsilon,
/// seed, target spec, attack config, and one summary record per window
/// (index, clean/adversarial predictions, target, truth, distances, loss,
/// halvings, optional traces). Adversarial inputs themselves are not
/// serialized.
nlohmann::json attack_result_to_json(const AttackResult& result, std::uint64_t seed);

/// Reconstruct everything attack_result_to_json wrote. Window tensors are
/// left empty.
AttackResult attack_result_from_json(const nlohmann::json& j);

AttackResult load_attack_result(const std::filesystem::path& path);

/// Flat CSV with one row per window:
/// window_index,clean_pred,adv_pred,target,linf_dist,l2_dist,final_loss
std::string attack_result_to_csv(const AttackResult& result);

std::string training_log_to_csv(const TrainLog& log);

nlohmann::json ks_report_to_json(const KSReport& report);

std::string histogram_to_csv(const Histogram& hist);

nlohmann::json sweep_curves_to_json(const std::vector<SweepCurve>& curves);
std::string sweep_curves_to_csv(const std::vector<SweepCurve>& curves);

} // namespace tsadv
