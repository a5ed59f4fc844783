#include "doctest.h"

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "popdyn/equilibrium.hpp"
#include "popdyn/quality.hpp"
#include "popdyn/winprob.hpp"

using namespace popdyn;

namespace {

double mean_rank(const std::vector<double>& b) {
    double q = 0;
    for (std::size_t i = 0; i < b.size(); ++i) q += static_cast<double>(i + 1) * b[i];
    return q;
}

// class-aware q-bar by tuple enumeration with repetition
double multiclass_q_oracle(const std::vector<int>& order, double alpha, int k, const std::vector<UserClass>& classes) {
    const auto p = oracle::selection(order, alpha);
    const int n = static_cast<int>(p.size());
    double total = 0;
    for (const auto& c : classes) {
        std::vector<int> pos(static_cast<std::size_t>(n) + 1);
        for (int j = 0; j < n; ++j) pos[static_cast<std::size_t>(c.quality_order[static_cast<std::size_t>(j)])] = j + 1;
        long double q = 0;
        std::function<void(int, long double, int)> rec = [&](int d, long double prob, int best) {
            if (d == k) {
                q += prob * best;
                return;
            }
            for (int i = 1; i <= n; ++i) rec(d + 1, prob * p[static_cast<std::size_t>(i - 1)], std::max(best, pos[static_cast<std::size_t>(i)]));
        };
        rec(0, 1, 0);
        total += c.probability * static_cast<double>(q);
    }
    return total;
}

double hellinger(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::pow(std::sqrt(a[i]) - std::sqrt(b[i]), 2);
    return std::sqrt(s / 2);
}

double bhattacharyya(const std::vector<double>& a, const std::vector<double>& b) {
    double bc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) bc += std::sqrt(a[i] * b[i]);
    return -std::log(bc);
}

double kl(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] > 0) s += a[i] * std::log(a[i] / b[i]);
    return s;
}

}  // namespace

TEST_CASE("avg_quality examples") {
    const int n = 19;
    CHECK(avg_quality(WinProbVector{std::vector<double>(n, 1.0 / n)}) == doctest::Approx(10.0));
    std::vector<double> top(4, 0.0);
    top[3] = 1;
    CHECK(avg_quality(WinProbVector{top}) == 4.0);
    const WinProbVector b{{0, 1.0 / 6, 2.0 / 6, 3.0 / 6}};
    CHECK(avg_quality(b) == doctest::Approx(10.0 / 3));
    CHECK(q_min_without_rep(4, 2) == doctest::Approx(10.0 / 3));
}

TEST_CASE("q_min closed forms") {
    CHECK(q_min_with_rep(2, 2) == doctest::Approx(1.75));
    CHECK(q_min_with_rep(2, 1) == doctest::Approx(1.5));
    for (int k = 2; k <= 10; ++k) CHECK(q_min_with_rep(10, k) > q_min_with_rep(10, k - 1));
    for (int n : {3, 7, 20}) {
        CHECK(q_min_without_rep(n, n) == doctest::Approx(n));
        CHECK(q_min_without_rep(n, 1) == doctest::Approx((n + 1) / 2.0));
    }
    CHECK(q_min_without_rep(20, 5) == doctest::Approx(17.5));
}

TEST_CASE("q_min matches the alpha = 0 engines") {
    for (int n = 2; n <= 7; ++n)
        for (int k = 1; k <= n; ++k) {
            const auto id = oracle::all_permutations(n).front();
            CHECK(mean_rank(oracle::with_rep(id, 0.0, k)) == doctest::Approx(q_min_with_rep(n, k)).epsilon(1e-12));
            CHECK(mean_rank(oracle::uniform_subsets(n, k)) == doctest::Approx(q_min_without_rep(n, k)).epsilon(1e-12));
        }
}

TEST_CASE("target distribution") {
    const auto flat = target_distribution(12, 0.0);
    for (double x : flat.probs) CHECK(x == doctest::Approx(1.0 / 12));
    CHECK(flat.target_quality == doctest::Approx(6.5));

    const auto t = target_distribution(20, 2.0);
    CHECK(t.probs[19] / t.probs[18] == doctest::Approx(4.0));
    CHECK(std::accumulate(t.probs.begin(), t.probs.end(), 0.0) == doctest::Approx(1.0));
    for (std::size_t i = 1; i < t.probs.size(); ++i) CHECK(t.probs[i] > t.probs[i - 1]);
    CHECK(t.target_quality == doctest::Approx(mean_rank(t.probs)));

    const auto sharp = target_distribution(20, 50.0);
    CHECK(sharp.probs[19] > 1 - 1e-12);
}

TEST_CASE("distances") {
    const std::vector<double> a{0.1, 0.2, 0.3, 0.4};
    for (auto m : {Metric::Hellinger, Metric::RelativeEntropy, Metric::Bhattacharyya}) CHECK(distance(a, a, m) == doctest::Approx(0.0).epsilon(1e-15));
    const std::vector<double> e1{1, 0}, e2{0, 1};
    CHECK(distance(e1, e2, Metric::Hellinger) == doctest::Approx(1.0));
    const std::vector<double> half{0.5, 0.5}, q{0.25, 0.75};
    CHECK(distance(half, q, Metric::RelativeEntropy) == doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3)));
    CHECK_THROWS_AS(distance(half, e1, Metric::RelativeEntropy), Error);
    // zero entries of b contribute nothing
    CHECK(distance(e1, half, Metric::RelativeEntropy) == doctest::Approx(std::log(2.0)));

    const std::vector<double> b{0.05, 0.15, 0.3, 0.5}, c{0.3, 0.3, 0.2, 0.2};
    CHECK(distance(b, c, Metric::Hellinger) == doctest::Approx(hellinger(b, c)));
    CHECK(distance(b, c, Metric::Bhattacharyya) == doctest::Approx(bhattacharyya(b, c)));
    CHECK(distance(b, c, Metric::RelativeEntropy) == doctest::Approx(kl(b, c)));
    CHECK(distance(b, c, Metric::Hellinger) == doctest::Approx(distance(c, b, Metric::Hellinger)));
    CHECK(distance(b, c, Metric::Bhattacharyya) == doctest::Approx(distance(c, b, Metric::Bhattacharyya)));
    CHECK(std::fabs(distance(b, c, Metric::RelativeEntropy) - distance(c, b, Metric::RelativeEntropy)) > 1e-3);
}

TEST_CASE("metric names") {
    CHECK(parse_metric("hellinger") == Metric::Hellinger);
    CHECK(parse_metric("kl") == Metric::RelativeEntropy);
    CHECK(parse_metric("bhattacharyya") == Metric::Bhattacharyya);
    CHECK(parse_metric(to_string(Metric::RelativeEntropy)) == Metric::RelativeEntropy);
    CHECK_THROWS_AS(parse_metric("euclid"), Error);
}

TEST_CASE("delta_q") {
    const auto t = target_distribution(20, 2.0);
    CHECK(delta_q(WinProbVector{t.probs}, t) == doctest::Approx(0.0));
    const auto cfg = MarketConfig::basic(20, 5, 0.0, RepetitionMode::WithoutRepetition);
    const auto b0 = win_probs(Permutation::identity(20), cfg);
    CHECK(delta_q(b0, t) == doctest::Approx(std::fabs(t.target_quality - 17.5)).epsilon(1e-10));
    auto at40 = cfg;
    at40.alpha = 0.40;
    CHECK(delta_q(win_probs(Permutation::identity(20), at40), t) < 0.05);
}

TEST_CASE("average_quality against enumeration") {
    for (auto mode : {RepetitionMode::WithRepetition, RepetitionMode::WithoutRepetition})
        for (const auto& order : oracle::all_permutations(5)) {
            auto cfg = MarketConfig::basic(5, 3, 0.8, mode);
            const auto b = mode == RepetitionMode::WithRepetition ? oracle::with_rep(order, 0.8, 3) : oracle::without_rep(order, 0.8, 3);
            CHECK(average_quality(Permutation(order), cfg) == doctest::Approx(mean_rank(b)).epsilon(1e-12));
        }
    auto cfg = MarketConfig::basic(5, 2, 1.0, RepetitionMode::WithRepetition);
    cfg.classes = {{0.5, {1, 2, 3, 4, 5}}, {0.3, {5, 4, 3, 2, 1}}, {0.2, {2, 4, 1, 5, 3}}};
    for (const auto& order : oracle::all_permutations(5))
        CHECK(average_quality(Permutation(order), cfg) == doctest::Approx(multiclass_q_oracle(order, 1.0, 2, cfg.classes)).epsilon(1e-12));

    // naive users add f_m times the perceived rank of the top item
    auto naive = MarketConfig::basic(5, 2, 1.0, RepetitionMode::WithRepetition);
    naive.naive_fraction = 0.2;
    const std::vector<int> order{5, 1, 2, 3, 4};
    const double informed = mean_rank(oracle::with_rep(order, 1.0, 2));
    CHECK(average_quality(Permutation(order), naive) == doctest::Approx(0.8 * informed + 0.2 * 4));
}

TEST_CASE("q-bar on the natural order grows with alpha and K") {
    for (int k = 1; k <= 8; ++k) {
        double prev = -1;
        for (double a = 0; a <= 4.0001; a += 0.5) {
            const double q = natural_quality(MarketConfig::basic(20, k, 0, RepetitionMode::WithRepetition), a);
            if (k > 1) CHECK(q > prev);
            prev = q;
        }
    }
    for (double a = 0; a <= 4.0001; a += 0.5) {
        double prev = -1;
        for (int k = 1; k <= 8; ++k) {
            const double q = natural_quality(MarketConfig::basic(20, k, 0, RepetitionMode::WithRepetition), a);
            CHECK(q > prev);
            prev = q;
        }
    }
    CHECK(natural_quality(MarketConfig::basic(20, 5, 0, RepetitionMode::WithRepetition), 50.0) > 20 - 1e-6);
}

TEST_CASE("top share ratio increases with alpha") {
    double prev = 0;
    for (double a = 0; a <= 5.0001; a += 0.5) {
        const double r = top_share_ratio(20, 5, a);
        CHECK(r > prev);
        prev = r;
    }
    CHECK(top_share_ratio(20, 5, 0) == doctest::Approx(0.25));
}

TEST_CASE("alpha for a quality target") {
    const auto cfg = MarketConfig::basic(20, 5, 0, RepetitionMode::WithoutRepetition);
    const auto t = target_distribution(20, 2.0);
    const double a = optimize_alpha_for_quality(cfg, t.target_quality);
    CHECK(a == doctest::Approx(0.40).epsilon(0.05));
    CHECK(std::fabs(natural_quality(cfg, a) - t.target_quality) < 1e-6 * 20);
    CHECK(natural_quality(cfg, a - 0.1) < t.target_quality);
    CHECK(natural_quality(cfg, a + 0.1) > t.target_quality);
    CHECK(optimize_alpha_for_quality(cfg, q_min_without_rep(20, 5)) == 0.0);
    CHECK_THROWS_AS(optimize_alpha_for_quality(cfg, 20.5), Error);
}

TEST_CASE("distance minimisation recovers a model-generated target") {
    auto cfg = MarketConfig::basic(7, 3, 0, RepetitionMode::WithoutRepetition);
    auto gen = cfg;
    gen.alpha = 0.7;
    TargetDistribution t;
    t.probs = win_probs(Permutation::identity(7), gen).probs;
    t.target_quality = mean_rank(t.probs);
    std::vector<double> grid;
    for (double a = 0; a <= 2.0001; a += 0.1) grid.push_back(a);
    for (auto m : {Metric::Hellinger, Metric::Bhattacharyya}) {
        const auto opt = optimize_alpha_for_distance(cfg, t, m, grid);
        CHECK(opt.alpha == doctest::Approx(0.7).epsilon(0.15));
        for (double v : opt.grid_values) CHECK(opt.value <= v + 1e-12);
    }
}

TEST_CASE("distance minimisation for the beta = 2 target") {
    const auto cfg = MarketConfig::basic(20, 5, 0, RepetitionMode::WithoutRepetition);
    const auto t = target_distribution(20, 2.0);
    std::vector<double> grid;
    for (double a = 0; a <= 1.5001; a += 0.1) grid.push_back(a);
    for (auto m : {Metric::Hellinger, Metric::Bhattacharyya}) {
        const auto opt = optimize_alpha_for_distance(cfg, t, m, grid);
        CHECK(opt.alpha >= 0.56);
        CHECK(opt.alpha <= 0.60);
        for (double v : opt.grid_values) CHECK(opt.value <= v + 1e-12);
    }
    const auto kl_opt = optimize_alpha_for_distance(cfg, t, Metric::RelativeEntropy, grid);
    for (double v : kl_opt.grid_values) CHECK(kl_opt.value <= v + 1e-12);
}

TEST_CASE("overall quality from stable points") {
    const auto cfg = MarketConfig::basic(4, 2, 0.5, RepetitionMode::WithRepetition);
    StablePoint p;
    p.perm = Permutation::identity(4);
    p.b = win_probs(p.perm, cfg);
    p.attractiveness = 1.0;
    CHECK(overall_quality_multiclass({p}, cfg) == doctest::Approx(average_quality(p.perm, cfg)));

    StablePoint q = p;
    q.perm = Permutation::critical(4);
    p.attractiveness = 0.5;
    q.attractiveness = 0.5;
    CHECK(overall_quality_multiclass({p, q}, cfg) ==
          doctest::Approx(0.5 * average_quality(p.perm, cfg) + 0.5 * average_quality(q.perm, cfg)));

    q.attractiveness.reset();
    CHECK_THROWS_AS(overall_quality_multiclass({p, q}, cfg), Error);
    q.attractiveness = 0.2;
    CHECK_THROWS_AS(overall_quality_multiclass({p, q}, cfg), Error);
}

TEST_CASE("overall quality matches basin weights from brute force") {
    auto cfg = MarketConfig::basic(6, 2, 1.0, RepetitionMode::WithRepetition);
    cfg.classes = {{0.6, {1, 2, 3, 4, 5, 6}}, {0.4, {3, 1, 6, 2, 5, 4}}};
    const auto graph = build_permutation_graph(cfg);
    const auto points = fixed_points_with_attractiveness(graph, cfg);
    const auto basins = oracle::basins(6, [&](const std::vector<int>& o) {
        const auto b = win_probs_multiclass(Permutation(o), cfg).probs;
        bool tie = false;
        return oracle::order_from_b(b, tie);
    });
    CHECK(basins.count({}) == 0);
    double expect = 0;
    for (const auto& [perm, count] : basins) expect += static_cast<double>(count) / 720.0 * multiclass_q_oracle(perm, 1.0, 2, cfg.classes);
    CHECK(overall_quality_multiclass(points, cfg) == doctest::Approx(expect).epsilon(1e-12));
}
