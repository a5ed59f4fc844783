#pragma once

// Seeded Monte Carlo of the rank-based Polya urn.
//
// Round procedure (fixed, so traces are reproducible):
//   1. if f_m > 0, one uniform decides whether the user is naive; a naive
//      user picks the current most popular item and the round ends;
//   2. with more than one class, one uniform picks the class;
//   3. with a K law, one uniform picks K;
//   4. K draws pick ranks (with replacement: one uniform each against the
//      rank CDF; without: one uniform each against the renormalised
//      remaining mass); the winner is the drawn item best in the class's
//      quality order; its weight grows by one.
// The strict popularity order (weight desc, id asc) is kept incrementally.

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "popdyn/core.hpp"
#include "popdyn/rng.hpp"

namespace popdyn {

struct Checkpoint {
    std::uint64_t round = 0;
    std::vector<std::int64_t> weights;
    std::vector<double> normalized;
};

struct CheckpointSchedule {
    std::vector<std::uint64_t> rounds;  // ascending

    /// 1, 2, 5, 10, 20, 50, ... up to `max_round`, plus `max_round` itself.
    static CheckpointSchedule log125(std::uint64_t max_round);
    static CheckpointSchedule final_only(std::uint64_t max_round) { return {{max_round}}; }
};

struct UrnTrace {
    MarketConfig config;
    std::uint64_t seed = 0;
    std::vector<Checkpoint> checkpoints;
    Permutation final_permutation;
    /// First round from which the weights agree with a stable permutation
    /// (non-decreasing along it; equal weights may sit in either order) and
    /// keep agreeing until the end of the run.
    std::optional<std::uint64_t> hit_round;
    std::optional<Permutation> hit_point;
};

/// Fixed per-config tables for drawing winners.
class UrnSampler {
public:
    explicit UrnSampler(const MarketConfig& cfg);

    /// One competition given the popularity order `by_rank` (item ids, most
    /// popular first). Returns the winner's id.
    int draw_winner(std::span<const int> by_rank, Stream& rng) const;

    int n_items() const noexcept { return n_; }

private:
    int n_;
    RepetitionMode mode_;
    double naive_;
    std::vector<double> rank_weight_;     // rank_weight_[r] = (r+1)^-alpha
    std::vector<double> rank_cdf_;        // with repetition
    std::vector<double> class_cdf_;
    std::vector<std::vector<int>> quality_pos_;  // [class][item-1] = position in v_c (1 = worst)
    std::vector<double> k_cdf_;
    int fixed_k_;
};

/// Urn state with an incrementally maintained strict order.
class Urn {
public:
    explicit Urn(const MarketConfig& cfg);

    void add_win(int item);
    std::span<const int> by_rank() const { return by_rank_; }
    const std::vector<std::int64_t>& weights() const { return weights_; }
    std::int64_t total() const { return total_; }
    /// Increasing-popularity permutation of the current strict order.
    Permutation permutation() const;
    /// Number of order changes so far (swaps performed).
    std::uint64_t swaps() const { return swaps_; }

private:
    std::vector<std::int64_t> weights_;  // by item id - 1
    std::vector<int> by_rank_;           // item ids, most popular first
    std::vector<int> pos_;               // pos_[item-1] = index in by_rank_
    std::int64_t total_ = 0;
    std::uint64_t swaps_ = 0;
};

/// `stable` (optional) are the permutations that count for hit_round.
UrnTrace simulate_run(const MarketConfig& cfg, std::uint64_t rounds, std::uint64_t seed,
                      const CheckpointSchedule& schedule, const std::vector<Permutation>& stable = {},
                      std::uint64_t stream_index = 0);

/// Summary of one run used by batch statistics.
struct RunOutcome {
    std::vector<std::int64_t> final_weights;
    Permutation final_permutation;
    std::optional<std::uint64_t> hit_round;
    std::optional<Permutation> hit_point;
};

RunOutcome run_outcome(const MarketConfig& cfg, std::uint64_t rounds, std::uint64_t seed, std::uint64_t run_index,
                       const std::vector<Permutation>& stable);

/// Winner frequencies at a frozen popularity order, `draws` competitions.
std::vector<double> frozen_win_frequencies(const MarketConfig& cfg, const Permutation& perm, std::uint64_t draws,
                                           std::uint64_t seed);

struct RunStatistics {
    std::uint64_t runs = 0;
    std::uint64_t rounds = 0;
    std::vector<double> win_frequency;     // mean over runs of (final - initial) / rounds
    std::vector<double> win_frequency_se;  // standard error of that mean
    double ordering_event_frequency = 0;   // runs with w_K < w_{K+1} < ... < w_N at the end
    std::vector<std::pair<Permutation, std::uint64_t>> hit_counts;
    std::vector<std::optional<std::uint64_t>> hit_rounds;  // per run
    std::uint64_t not_converged = 0;
    std::optional<double> median_hit_round;
    double top_not_best_frequency = 0;  // runs whose most popular item is not N
};

/// Per-run frequencies with standard errors over runs. The ordering event
/// uses the fixed K (1 for a K law).
RunStatistics estimate_win_frequencies(const MarketConfig& cfg, std::uint64_t rounds, std::uint64_t n_runs,
                                       std::uint64_t seed);

/// hit_round samples against `stable`; runs that do not settle count as
/// infinitely late in the median. Throws "empty_stable_set".
RunStatistics time_to_stable_point(const MarketConfig& cfg, std::uint64_t n_runs, std::uint64_t max_rounds,
                                   std::uint64_t seed, const std::vector<Permutation>& stable);

/// K (K-1) / (N (N-1) + K (K-1))
double naive_threshold(int n, int k);

struct NaiveDisruption {
    double threshold = 0;
    RunStatistics stats;
};

/// alpha = 0, without repetition. With `leader` set, that item starts with
/// weight 2 and everything else with 1.
NaiveDisruption naive_disruption_check(int n, int k, double fm, std::uint64_t rounds, std::uint64_t n_runs,
                                       std::uint64_t seed, std::optional<int> leader = std::nullopt);

/// Median with nullopt as +infinity; nullopt when the median is infinite.
std::optional<double> censored_median(const std::vector<std::optional<std::uint64_t>>& samples);

/// round,item_id,weight,normalized_weight
void write_trace_csv(const UrnTrace& trace, std::ostream& out);

}  // namespace popdyn
