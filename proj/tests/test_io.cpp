#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "popdyn/io.hpp"

using namespace popdyn;
using nlohmann::json;

TEST_CASE("config round trip") {
    auto cfg = MarketConfig::basic(5, 3, 0.75, RepetitionMode::WithoutRepetition);
    cfg.naive_fraction = 0.1;
    cfg.classes = {{0.4, {1, 2, 3, 4, 5}}, {0.6, {5, 4, 3, 2, 1}}};
    cfg.initial_weights = {1, 2, 3, 4, 5};
    const auto back = config_from_json(to_json(cfg));
    CHECK(back.n_items == 5);
    CHECK(back.fixed_k() == 3);
    CHECK(back.alpha == 0.75);
    CHECK(back.repetition_mode == RepetitionMode::WithoutRepetition);
    CHECK(back.naive_fraction == 0.1);
    REQUIRE(back.classes.size() == 2);
    CHECK(back.classes[1].quality_order == std::vector<int>{5, 4, 3, 2, 1});
    CHECK(back.initial_weights == cfg.initial_weights);
}

TEST_CASE("K laws in both spellings") {
    const auto a = k_distribution_from_json(json::parse("[0.5, 0, 0.5]"));
    const auto b = k_distribution_from_json(json::parse(R"({"1": 0.5, "3": 0.5})"));
    CHECK(a.probs == b.probs);
    auto cfg = config_from_json(json::parse(R"({"n_items": 4, "alpha": 1, "discrimination": {"2": 0.25, "4": 0.75}})"));
    CHECK_FALSE(cfg.has_fixed_k());
    CHECK(cfg.k_distribution().p(4) == 0.75);
}

TEST_CASE("invalid documents") {
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"alpha": 1})")), Error);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"n_items": 3, "discrimination": 4})")), Error);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"n_items": 3, "discrimination": 2, "repetition_mode": "sometimes"})")), Error);
    try {
        read_json_file("/nonexistent/popdyn.json");
        FAIL("expected io error");
    } catch (const Error& e) {
        CHECK(e.code() == "io_error");
    }
}

TEST_CASE("shipped configs load") {
    for (const auto& entry : std::filesystem::directory_iterator(std::string(POPDYN_SOURCE_DIR) + "/configs")) {
        CAPTURE(entry.path().string());
        CHECK_NOTHROW(load_config(entry.path().string()));
    }
    const auto c2 = load_config(std::string(POPDYN_SOURCE_DIR) + "/configs/classes2.json");
    CHECK(c2.n_items == 10);
    CHECK(c2.classes.size() == 2);
}

TEST_CASE("stable point set serialisation") {
    const auto cfg = MarketConfig::basic(3, 2, 1.0, RepetitionMode::WithRepetition);
    const auto set = enumerate_stable_points(cfg, SearchStrategy::exhaustive());
    const auto j = to_json(set);
    CHECK(j.at("strategy") == "exhaustive");
    REQUIRE(j.at("points").size() == 2);
    CHECK(j.at("points")[0].at("b")[2].get<double>() == doctest::Approx(96.0 / 121));
}
