#pragma once

// Selection and winning probabilities under the rank-based pre-selection law
// p_i proportional to r_i^-alpha.

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "popdyn/core.hpp"

namespace popdyn {

/// Default cap on the number of ordered K-sequences the without-repetition
/// engine may enumerate. Overridden by the POPDYN_MAX_ENUM environment variable.
inline constexpr std::uint64_t kDefaultEnumerationBudget = 100'000'000;
std::uint64_t enumeration_budget();

/// N!/(N-K)!, saturating at UINT64_MAX.
std::uint64_t disposition_count(int n, int k);

/// G = sum_{i=1..N} i^-alpha, accumulated in long double in ascending i.
double rank_normalizer(int n, double alpha);

struct SelectionProbVector {
    std::vector<double> probs;      // probs[i-1] = p_i, indexed by item
    std::vector<double> cumulants;  // cumulants[i-1] = s_i = p_1 + ... + p_i
};

/// p_i = r_i^-alpha / sum_j r_j^-alpha. The ranks must be strict.
SelectionProbVector selection_probs(const RankVector& ranks, double alpha);
SelectionProbVector selection_probs(const Permutation& perm, double alpha);

/// Closed form for uniform pre-selection of K distinct items.
WinProbVector win_probs_uniform(int n, int k);

WinProbVector win_probs_with_rep(const Permutation& perm, double alpha, int k);

/// Exact enumeration of all ordered K-sequences drawn without replacement.
/// Throws Error("budget_exceeded") when N!/(N-K)! exceeds `budget`.
WinProbVector win_probs_without_rep(const Permutation& perm, double alpha, int k,
                                    std::uint64_t budget = enumeration_budget());

/// Probability that the recommender produces exactly `sequence` (distinct item
/// ids, in presentation order) when drawing without replacement.
double preselection_sequence_prob(const RankVector& ranks, std::span<const int> sequence, double alpha);

/// b_hat_i = f_m [i == current_top] + (1 - f_m) b_i
WinProbVector blend_naive(const WinProbVector& b, int current_top, double naive_fraction);

/// b_i = sum_k p_k b_i(k). Every k with p_k > 0 must be present in the map
/// and every map key must be in the support, otherwise "mismatched_support".
WinProbVector blend_k_distribution(const std::map<int, WinProbVector>& per_k, const KDistribution& dist);

// Engines working on selection weights listed in quality order
// (weights[i-1] is the unnormalised selection weight of the i-th lowest
// quality item). They return winning probabilities in the same order.
std::vector<double> with_rep_engine(std::span<const double> weights, const KDistribution& dist);
std::vector<double> without_rep_engine(std::span<const double> weights, const KDistribution& dist,
                                       std::uint64_t budget);

/// Class-conditional winning probabilities: result[c][i-1] is the probability
/// that a class-c user picks the item it ranks i-th in quality.
std::vector<std::vector<double>> class_win_probs(const Permutation& perm, const MarketConfig& cfg);

/// Multi-class winning probabilities (no naive users), indexed by item id.
WinProbVector win_probs_multiclass(const Permutation& perm, const MarketConfig& cfg);

/// Full engine used by the B-map: classes and K law first, then the naive
/// blend towards the most popular item of `perm`.
WinProbVector win_probs(const Permutation& perm, const MarketConfig& cfg);

/// Reusable evaluator for hot loops over many permutations of one config.
/// Holds the per-rank selection weights and scratch buffers, so it is cheap
/// to call but not thread-safe; give each thread its own copy.
class WinProbEvaluator {
public:
    explicit WinProbEvaluator(const MarketConfig& cfg, std::uint64_t budget = enumeration_budget());

    /// Writes b (indexed by item id - 1) for the popularity order `order`
    /// (item ids by increasing popularity).
    void evaluate(std::span<const int> order, std::span<double> b_out);

    const MarketConfig& config() const noexcept { return cfg_; }

private:
    MarketConfig cfg_;
    std::vector<UserClass> classes_;
    KDistribution dist_;
    std::uint64_t budget_;
    std::vector<double> rank_weight_;   // rank_weight_[r-1] = r^-alpha
    std::vector<double> item_weight_;   // by item id
    std::vector<double> class_weight_;  // in class quality order
};

}  // namespace popdyn
