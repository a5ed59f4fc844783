#pragma once

// JSON documents for configs, stable-point sets and run statistics.
//
// MarketConfig fields: n_items, alpha, discrimination (integer K, or an array
// of p_k for k = 1..len, or an object {"k": p_k}), repetition_mode
// ("with-repetition" / "without-repetition"), naive_fraction, classes
// ([{"class_probability": f, "quality_order": [...]}]), initial_weights.

#include <string>

#include "json.hpp"
#include "popdyn/core.hpp"
#include "popdyn/equilibrium.hpp"
#include "popdyn/simulator.hpp"

namespace popdyn {

nlohmann::json to_json(const MarketConfig& cfg);
/// Missing fields keep their defaults; the result is validated.
MarketConfig config_from_json(const nlohmann::json& j);
MarketConfig load_config(const std::string& path);

KDistribution k_distribution_from_json(const nlohmann::json& j);
std::vector<UserClass> classes_from_json(const nlohmann::json& j);

nlohmann::json to_json(const StablePointSet& set);
nlohmann::json to_json(const RunStatistics& st);

nlohmann::json read_json_file(const std::string& path);

}  // namespace popdyn
