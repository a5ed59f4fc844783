#pragma once

// The B-map over popularity orderings, its stable points, the permutation
// graph and attractiveness of fixed points.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "popdyn/core.hpp"

namespace popdyn {

struct BMapResult {
    Permutation input_perm;
    WinProbVector b;
    Permutation output_perm;
    bool has_tie = false;
};

/// Popularity order induced by b (item ids by increasing b).
///
/// Positive entries are ranked by value; entries within a relative
/// kTieTolerance of each other count as tied and the lower id is placed as
/// more popular. Items with b_i == 0 never win again, so their weights are
/// frozen: they sink below every positive item and are listed in ascending
/// id, making all orderings of that block one canonical state.
///
/// Returns true through `has_tie` when two positive entries are tied.
void b_image_order(std::span<const double> b, std::span<int> order_out, bool& has_tie);

BMapResult apply_B(const Permutation& perm, const MarketConfig& cfg);
bool is_stable(const Permutation& perm, const MarketConfig& cfg);

struct StablePoint {
    Permutation perm;
    WinProbVector b;
    std::optional<double> attractiveness;
    std::uint64_t hits = 0;  // randomized search: trials ending here
};

struct StablePointSet {
    std::string strategy;                 // "exhaustive", "pruned", "randomized"
    bool exact = false;                   // true only for exhaustive scans
    std::vector<StablePoint> points;      // sorted by permutation
    std::uint64_t permutations_scanned = 0;
    int pruned_level = 0;                 // M reached by the pruned scan
    std::uint64_t trials = 0;
    std::uint64_t non_converged = 0;      // trials hitting the iteration cap
    std::uint64_t tie_rejected = 0;       // trials ending at a fixed point with ties

    bool contains(const Permutation& perm) const;
    std::vector<Permutation> permutations() const;
};

struct SearchStrategy {
    enum class Kind { Exhaustive, Pruned, Randomized } kind = Kind::Exhaustive;
    int pruned_level = 0;       // M; 0 = grow from 2 until a level adds nothing
    std::uint64_t trials = 1000;
    std::uint64_t seed = 0;

    static SearchStrategy exhaustive() { return {}; }
    static SearchStrategy pruned(int m = 0) { return {Kind::Pruned, m, 0, 0}; }
    static SearchStrategy randomized(std::uint64_t trials, std::uint64_t seed) {
        return {Kind::Randomized, 0, trials, seed};
    }
};

inline constexpr int kDefaultExhaustiveCap = 10;

/// Exhaustive requires N <= exhaustive_cap ("cap_exceeded" otherwise).
/// pruned(M) scans the first (M+1)! permutations in lexicographic order, i.e.
/// every reordering of the M+1 highest-quality items with the rest natural.
StablePointSet enumerate_stable_points(const MarketConfig& cfg, const SearchStrategy& strategy,
                                       int exhaustive_cap = kDefaultExhaustiveCap);

/// Algorithm-1/2 style search: random stochastic start, iterate the B-map
/// until the rank order repeats. Capped at 10 N^2 iterations per trial.
StablePointSet randomized_search(const MarketConfig& cfg, std::uint64_t trials, std::uint64_t seed);

/// Functional graph of the B-map over all N! permutations.
struct PermutationGraph {
    int n_items = 0;
    std::string scope = "full";              // "full" or "seeded"
    std::vector<Permutation> seeded_nodes;   // only for scope == "seeded"
    std::vector<std::uint32_t> edges;        // edges[i] = lexicographic index of B(node i)
    std::vector<std::uint8_t> tie;           // B(node i) had a tie
    std::vector<std::uint32_t> component;    // weakly connected component id per node
    std::vector<std::uint32_t> component_size;
    std::vector<std::uint32_t> fixed_points; // lexicographic indices with self-loops

    std::uint64_t node_count() const { return scope == "full" ? edges.size() : seeded_nodes.size(); }
    std::size_t component_count() const { return component_size.size(); }
    /// A functional graph has one cycle per component; acyclic apart from
    /// self-loops means every component holds exactly one fixed point.
    bool acyclic_except_self_loops() const { return component_count() == fixed_points.size(); }
    bool is_fixed(std::uint64_t index) const { return edges.at(index) == index; }
};

PermutationGraph build_permutation_graph(const MarketConfig& cfg, int cap = kDefaultExhaustiveCap);

/// Forward closure of the B-map from `seeds` (scope "seeded"): the nodes and
/// edges reachable from the seeds, without predecessor information.
PermutationGraph build_seeded_graph(const MarketConfig& cfg, const std::vector<Permutation>& seeds,
                                    std::size_t max_nodes = 1'000'000);

/// |component(f)| / N!. Throws "not_fixed" unless f is a fixed point of a full graph.
double attractiveness(const PermutationGraph& g, const Permutation& f);

/// All fixed points of a full graph (ties included) with their b-vectors
/// and attractiveness. Attractiveness over this list sums to 1 when the
/// graph is acyclic apart from self-loops.
std::vector<StablePoint> fixed_points_with_attractiveness(const PermutationGraph& g, const MarketConfig& cfg);

/// Edge list text: one "from to" pair per line, permutations comma-joined.
std::string edge_list_text(const PermutationGraph& g);

/// Iterates apply_B from `start` until the output repeats the input.
/// Returns the number of steps, or nullopt when `max_steps` is exhausted.
std::optional<int> steps_to_fixed_point(const Permutation& start, const MarketConfig& cfg, int max_steps);

}  // namespace popdyn
