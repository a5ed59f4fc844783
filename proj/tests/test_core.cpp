#include "doctest.h"

#include <algorithm>
#include <random>

#include "popdyn/core.hpp"

using namespace popdyn;

namespace {

std::string config_error(const MarketConfig& cfg) {
    try {
        validate_config(cfg);
    } catch (const Error& e) {
        CHECK(e.code() == "invalid_config");
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("validate_config accepts the toy example and names violations") {
    auto cfg = MarketConfig::basic(5, 3, 1.0, RepetitionMode::WithoutRepetition);
    CHECK(config_error(cfg).empty());

    auto big_k = MarketConfig::basic(5, 6, 1.0, RepetitionMode::WithoutRepetition);
    CHECK(config_error(big_k) == "K exceeds N");

    auto classes = cfg;
    classes.classes = {{0.5, {1, 2, 3, 4, 5}}, {0.4, {5, 4, 3, 2, 1}}};
    CHECK(config_error(classes) == "class probabilities sum != 1");

    auto bad_order = cfg;
    bad_order.classes = {{1.0, {1, 2, 2, 4, 5}}};
    CHECK(!config_error(bad_order).empty());

    auto bad_fm = cfg;
    bad_fm.naive_fraction = 1.5;
    CHECK(!config_error(bad_fm).empty());

    auto dist = cfg;
    dist.discrimination = KDistribution{{0.2, 0.3, 0.4}};
    CHECK(config_error(dist) == "K distribution probabilities sum != 1");
    dist.discrimination = KDistribution{{0.2, 0.3, 0.5}};
    CHECK(config_error(dist).empty());

    auto w0 = cfg;
    w0.initial_weights = {1, 1, 0, 1, 1};
    CHECK(!config_error(w0).empty());
}

TEST_CASE("compute_ranks counts weights at least as large") {
    CHECK(compute_ranks(WeightVector{{3, 1, 9, 2, 2}}).ranks == std::vector<int>{2, 5, 1, 4, 4});
    CHECK(compute_ranks(WeightVector{{1, 1, 1, 1, 1}}).ranks == std::vector<int>{5, 5, 5, 5, 5});
    CHECK(compute_ranks(WeightVector{{1, 2, 3, 4}}).ranks == std::vector<int>{4, 3, 2, 1});

    // count oracle over all pairs on random integer weights
    std::mt19937_64 gen(11);
    for (int t = 0; t < 200; ++t) {
        const int n = 1 + static_cast<int>(gen() % 9);
        WeightVector w;
        for (int i = 0; i < n; ++i) w.weights.push_back(1 + static_cast<double>(gen() % 4));
        const auto r = compute_ranks(w);
        for (int i = 0; i < n; ++i) {
            int count = 0;
            for (int j = 0; j < n; ++j) count += w.weights[static_cast<std::size_t>(j)] >= w.weights[static_cast<std::size_t>(i)];
            CHECK(r.ranks[static_cast<std::size_t>(i)] == count);
        }
    }
}

TEST_CASE("rank_with_tiebreak sorts by weight, ties by ascending id") {
    CHECK(rank_with_tiebreak(WeightVector{{1, 1, 2}}).most_popular_first() == std::vector<int>{3, 1, 2});
    CHECK(rank_with_tiebreak(WeightVector{{7, 7, 7, 7}}).most_popular_first() == std::vector<int>{1, 2, 3, 4});
    CHECK(rank_with_tiebreak(WeightVector{{1, 2, 3, 4}}).is_natural());
}

TEST_CASE("Permutation conventions") {
    const auto id = Permutation::identity(4);
    CHECK(id.order() == std::vector<int>{1, 2, 3, 4});
    CHECK(id.most_popular() == 4);
    CHECK(id.rank_of(4) == 1);
    CHECK(id.ranks() == std::vector<int>{4, 3, 2, 1});
    CHECK(Permutation::critical(5).order() == std::vector<int>{1, 2, 3, 5, 4});
    CHECK(Permutation::from_most_popular_first({3, 1, 2}).order() == std::vector<int>{2, 1, 3});
    CHECK_THROWS_AS(Permutation({1, 1, 2}), Error);
    CHECK_THROWS_AS(Permutation({0, 1, 2}), Error);
    CHECK(id.to_string() == "1,2,3,4");
}

TEST_CASE("permutation_index is the lexicographic rank") {
    for (int n = 1; n <= 6; ++n) {
        std::vector<int> v(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i + 1;
        std::uint64_t idx = 0;
        do {
            CHECK(permutation_index(Permutation(v)) == idx);
            CHECK(permutation_at(n, idx).order() == v);
            ++idx;
        } while (std::next_permutation(v.begin(), v.end()));
        CHECK(idx == factorial(n));
    }
    CHECK(factorial(20) == 2432902008176640000ULL);
}

TEST_CASE("normalized weights") {
    const auto w = WeightVector{{1, 3}, 4}.normalized();
    CHECK(w.weights[0] == doctest::Approx(0.25));
    CHECK(w.round == 4);
    CHECK_THROWS_AS((WeightVector{{1, 0}}.normalized()), Error);
}

TEST_CASE("repetition mode names") {
    CHECK(parse_repetition_mode("with-rep") == RepetitionMode::WithRepetition);
    CHECK(parse_repetition_mode("without-repetition") == RepetitionMode::WithoutRepetition);
    CHECK(to_string(RepetitionMode::WithRepetition) == "with-repetition");
    CHECK_THROWS_AS(parse_repetition_mode("sometimes"), Error);
}
