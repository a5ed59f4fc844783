#include "popdyn/core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

namespace popdyn {

std::string to_string(RepetitionMode mode) {
    return mode == RepetitionMode::WithRepetition ? "with-repetition" : "without-repetition";
}

RepetitionMode parse_repetition_mode(const std::string& text) {
    if (text == "with-repetition" || text == "with-rep") return RepetitionMode::WithRepetition;
    if (text == "without-repetition" || text == "without-rep") return RepetitionMode::WithoutRepetition;
    throw Error("invalid_config", "unknown repetition mode '" + text + "'");
}

namespace {

bool is_permutation_of_1_to_n(const std::vector<int>& v) {
    std::vector<char> seen(v.size() + 1, 0);
    for (int id : v) {
        if (id < 1 || id > static_cast<int>(v.size()) || seen[static_cast<std::size_t>(id)]) return false;
        seen[static_cast<std::size_t>(id)] = 1;
    }
    return true;
}

}  // namespace

Permutation::Permutation(std::vector<int> order) : order_(std::move(order)) {
    if (!is_permutation_of_1_to_n(order_)) {
        throw Error("invalid_permutation", "permutation must contain each id 1..N exactly once");
    }
}

Permutation Permutation::identity(int n) {
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 1);
    return Permutation(std::move(order));
}

Permutation Permutation::critical(int n) {
    if (n < 2) throw Error("invalid_permutation", "critical permutation needs N >= 2");
    auto order = identity(n).order();
    std::swap(order[static_cast<std::size_t>(n - 1)], order[static_cast<std::size_t>(n - 2)]);
    return Permutation(std::move(order));
}

Permutation Permutation::from_most_popular_first(std::vector<int> order) {
    std::reverse(order.begin(), order.end());
    return Permutation(std::move(order));
}

std::vector<int> Permutation::most_popular_first() const {
    return {order_.rbegin(), order_.rend()};
}

int Permutation::rank_of(int item) const {
    auto it = std::find(order_.begin(), order_.end(), item);
    if (it == order_.end()) throw Error("invalid_permutation", "item not in permutation");
    return size() - static_cast<int>(it - order_.begin());
}

std::vector<int> Permutation::ranks() const {
    const int n = size();
    std::vector<int> r(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) r[static_cast<std::size_t>(order_[static_cast<std::size_t>(j)] - 1)] = n - j;
    return r;
}

bool Permutation::is_natural() const noexcept {
    for (std::size_t j = 0; j < order_.size(); ++j) {
        if (order_[j] != static_cast<int>(j) + 1) return false;
    }
    return true;
}

std::string Permutation::to_string(char sep) const {
    std::string out;
    for (std::size_t j = 0; j < order_.size(); ++j) {
        if (j) out += sep;
        out += std::to_string(order_[j]);
    }
    return out;
}

WeightVector WeightVector::normalized() const {
    long double total = 0;
    for (double w : weights) {
        if (!(w > 0)) throw Error("invalid_weights", "weights must be positive");
        total += w;
    }
    WeightVector out{weights, round};
    for (double& w : out.weights) w = static_cast<double>(w / total);
    return out;
}

bool RankVector::is_strict() const {
    return is_permutation_of_1_to_n(ranks);
}

Permutation RankVector::to_permutation() const {
    if (!is_strict()) throw Error("invalid_ranks", "rank vector is not strict");
    const int n = size();
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(n - ranks[static_cast<std::size_t>(i)])] = i + 1;
    return Permutation(std::move(order));
}

void WinProbVector::check() const {
    long double total = 0;
    for (double b : probs) {
        if (!(b >= 0)) throw Error("invalid_probabilities", "winning probabilities must be non-negative");
        total += b;
    }
    if (std::fabs(static_cast<double>(total) - 1.0) > kProbSumTolerance) {
        throw Error("invalid_probabilities", "winning probabilities do not sum to 1");
    }
}

KDistribution KDistribution::degenerate(int k) {
    KDistribution d;
    d.probs.assign(static_cast<std::size_t>(k), 0.0);
    d.probs.back() = 1.0;
    return d;
}

KDistribution MarketConfig::k_distribution() const {
    if (has_fixed_k()) return KDistribution::degenerate(fixed_k());
    return std::get<KDistribution>(discrimination);
}

std::vector<UserClass> MarketConfig::effective_classes() const {
    if (!classes.empty()) return classes;
    return {UserClass{1.0, Permutation::identity(n_items).order()}};
}

std::vector<std::int64_t> MarketConfig::effective_initial_weights() const {
    if (!initial_weights.empty()) return initial_weights;
    return std::vector<std::int64_t>(static_cast<std::size_t>(n_items), 1);
}

MarketConfig MarketConfig::basic(int n, int k, double alpha, RepetitionMode mode) {
    MarketConfig cfg;
    cfg.n_items = n;
    cfg.discrimination = k;
    cfg.alpha = alpha;
    cfg.repetition_mode = mode;
    return cfg;
}

const MarketConfig& validate_config(const MarketConfig& cfg) {
    auto fail = [](const std::string& what) -> void { throw Error("invalid_config", what); };
    const int n = cfg.n_items;
    if (n < 1) fail("N must be positive");
    if (!(cfg.alpha >= 0) || !std::isfinite(cfg.alpha)) fail("alpha must be a non-negative finite number");
    if (cfg.has_fixed_k()) {
        const int k = cfg.fixed_k();
        if (k < 1) fail("K must be at least 1");
        if (k > n) fail("K exceeds N");
    } else {
        const auto& dist = std::get<KDistribution>(cfg.discrimination);
        if (dist.probs.empty()) fail("K distribution is empty");
        if (dist.max_k() > n) fail("K distribution support exceeds N");
        long double total = 0;
        for (double p : dist.probs) {
            if (!(p >= 0)) fail("K distribution has a negative probability");
            total += p;
        }
        if (std::fabs(static_cast<double>(total) - 1.0) > kProbSumTolerance) fail("K distribution probabilities sum != 1");
    }
    if (!(cfg.naive_fraction >= 0 && cfg.naive_fraction <= 1)) fail("naive fraction f_m must lie in [0,1]");
    if (!cfg.classes.empty()) {
        long double total = 0;
        for (const auto& c : cfg.classes) {
            if (!(c.probability >= 0)) fail("class probability must be non-negative");
            if (static_cast<int>(c.quality_order.size()) != n || !is_permutation_of_1_to_n(c.quality_order)) {
                fail("class quality order is not a permutation of 1..N");
            }
            total += c.probability;
        }
        if (std::fabs(static_cast<double>(total) - 1.0) > kProbSumTolerance) fail("class probabilities sum != 1");
    }
    if (!cfg.initial_weights.empty()) {
        if (static_cast<int>(cfg.initial_weights.size()) != n) fail("initial weights must have N entries");
        for (auto w : cfg.initial_weights) {
            if (w < 1) fail("initial weights must be positive integers");
        }
    }
    return cfg;
}

RankVector compute_ranks(const WeightVector& w) {
    const int n = w.size();
    std::vector<double> sorted = w.weights;
    std::sort(sorted.begin(), sorted.end());
    RankVector r;
    r.ranks.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        // number of j with w_j >= w_i
        auto it = std::lower_bound(sorted.begin(), sorted.end(), w.weights[static_cast<std::size_t>(i)]);
        r.ranks[static_cast<std::size_t>(i)] = static_cast<int>(sorted.end() - it);
    }
    return r;
}

Permutation rank_with_tiebreak(std::span<const double> weights) {
    const int n = static_cast<int>(weights.size());
    std::vector<int> ids(static_cast<std::size_t>(n));
    std::iota(ids.begin(), ids.end(), 1);
    std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
        return weights[static_cast<std::size_t>(a - 1)] > weights[static_cast<std::size_t>(b - 1)];
    });
    return Permutation::from_most_popular_first(std::move(ids));
}

std::uint64_t factorial(int n) {
    if (n < 0 || n > 20) throw Error("domain_error", "factorial argument outside 0..20");
    std::uint64_t f = 1;
    for (int i = 2; i <= n; ++i) f *= static_cast<std::uint64_t>(i);
    return f;
}

std::uint64_t permutation_index(const Permutation& perm) {
    const int n = perm.size();
    const auto& order = perm.order();
    std::uint64_t index = 0;
    std::uint32_t used = 0;
    for (int j = 0; j < n; ++j) {
        const int id = order[static_cast<std::size_t>(j)];
        // count unused ids smaller than id
        const std::uint32_t below = (1u << (id - 1)) - 1u;
        const int smaller = std::popcount(below & ~used);
        index = index * static_cast<std::uint64_t>(n - j) + static_cast<std::uint64_t>(smaller);
        used |= 1u << (id - 1);
    }
    return index;
}

Permutation permutation_at(int n, std::uint64_t index) {
    std::vector<int> digits(static_cast<std::size_t>(n));
    for (int j = n - 1; j >= 0; --j) {
        const auto radix = static_cast<std::uint64_t>(n - j);
        digits[static_cast<std::size_t>(j)] = static_cast<int>(index % radix);
        index /= radix;
    }
    std::vector<int> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), 1);
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        auto it = pool.begin() + digits[static_cast<std::size_t>(j)];
        order.push_back(*it);
        pool.erase(it);
    }
    return Permutation(std::move(order));
}

}  // namespace popdyn
