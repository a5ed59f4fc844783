#include "popdyn/io.hpp"

#include <fstream>

namespace popdyn {

using nlohmann::json;

json to_json(const MarketConfig& cfg) {
    json j;
    j["n_items"] = cfg.n_items;
    j["alpha"] = cfg.alpha;
    if (cfg.has_fixed_k()) {
        j["discrimination"] = cfg.fixed_k();
    } else {
        j["discrimination"] = cfg.k_distribution().probs;
    }
    j["repetition_mode"] = to_string(cfg.repetition_mode);
    j["naive_fraction"] = cfg.naive_fraction;
    j["classes"] = json::array();
    for (const auto& c : cfg.classes) {
        j["classes"].push_back({{"class_probability", c.probability}, {"quality_order", c.quality_order}});
    }
    j["initial_weights"] = cfg.initial_weights;
    return j;
}

KDistribution k_distribution_from_json(const json& j) {
    KDistribution d;
    if (j.is_array()) {
        d.probs = j.get<std::vector<double>>();
    } else if (j.is_object()) {
        int max_k = 0;
        for (const auto& [key, _] : j.items()) max_k = std::max(max_k, std::stoi(key));
        d.probs.assign(static_cast<std::size_t>(max_k), 0.0);
        for (const auto& [key, value] : j.items()) d.probs[static_cast<std::size_t>(std::stoi(key) - 1)] = value.get<double>();
    } else {
        throw Error("invalid_config", "K distribution must be an array or an object");
    }
    return d;
}

std::vector<UserClass> classes_from_json(const json& j) {
    const json& list = j.is_object() && j.contains("classes") ? j.at("classes") : j;
    if (!list.is_array()) throw Error("invalid_config", "classes must be an array");
    std::vector<UserClass> out;
    for (const auto& c : list) {
        UserClass uc;
        uc.probability = c.at("class_probability").get<double>();
        uc.quality_order = c.at("quality_order").get<std::vector<int>>();
        out.push_back(std::move(uc));
    }
    return out;
}

MarketConfig config_from_json(const json& j) {
    MarketConfig cfg;
    try {
        cfg.n_items = j.at("n_items").get<int>();
        cfg.alpha = j.value("alpha", 0.0);
        if (j.contains("discrimination")) {
            const auto& d = j.at("discrimination");
            if (d.is_number_integer()) {
                cfg.discrimination = d.get<int>();
            } else {
                cfg.discrimination = k_distribution_from_json(d);
            }
        }
        if (j.contains("repetition_mode")) cfg.repetition_mode = parse_repetition_mode(j.at("repetition_mode").get<std::string>());
        cfg.naive_fraction = j.value("naive_fraction", 0.0);
        if (j.contains("classes")) cfg.classes = classes_from_json(j.at("classes"));
        if (j.contains("initial_weights")) cfg.initial_weights = j.at("initial_weights").get<std::vector<std::int64_t>>();
    } catch (const json::exception& e) {
        throw Error("invalid_config", std::string("config JSON: ") + e.what());
    }
    validate_config(cfg);
    return cfg;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("io_error", "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error("invalid_config", path + ": " + e.what());
    }
}

MarketConfig load_config(const std::string& path) { return config_from_json(read_json_file(path)); }

json to_json(const StablePointSet& set) {
    json j;
    j["strategy"] = set.strategy;
    j["exact"] = set.exact;
    j["permutations_scanned"] = set.permutations_scanned;
    if (set.strategy == "pruned") j["pruned_level"] = set.pruned_level;
    if (set.strategy == "randomized") {
        j["trials"] = set.trials;
        j["non_converged"] = set.non_converged;
        j["tie_rejected"] = set.tie_rejected;
    }
    j["points"] = json::array();
    for (const auto& p : set.points) {
        json e;
        e["permutation"] = p.perm.order();
        e["b"] = p.b.probs;
        if (p.attractiveness) e["attractiveness"] = *p.attractiveness;
        if (set.strategy == "randomized") e["hits"] = p.hits;
        j["points"].push_back(std::move(e));
    }
    return j;
}

json to_json(const RunStatistics& st) {
    json j;
    j["runs"] = st.runs;
    j["rounds"] = st.rounds;
    j["win_frequency"] = st.win_frequency;
    j["win_frequency_se"] = st.win_frequency_se;
    j["ordering_event_frequency"] = st.ordering_event_frequency;
    j["top_not_best_frequency"] = st.top_not_best_frequency;
    if (!st.hit_rounds.empty()) {
        j["hit_counts"] = json::array();
        for (const auto& [p, c] : st.hit_counts) j["hit_counts"].push_back({{"permutation", p.order()}, {"count", c}});
        json hits = json::array();
        for (const auto& h : st.hit_rounds) hits.push_back(h ? json(*h) : json(nullptr));
        j["hit_rounds"] = std::move(hits);
        j["not_converged"] = st.not_converged;
        j["median_hit_round"] = st.median_hit_round ? json(*st.median_hit_round) : json(nullptr);
    }
    return j;
}

}  // namespace popdyn
