#pragma once

// Data-parallel kernels. Each kernel has an OpenMP variant used by the
// library and a serial twin kept as the reference in tests and benchmarks.
// Parallel variants reduce partial results in a fixed order, so their output
// does not depend on the thread count.

#include <cstdint>
#include <span>
#include <vector>

#include "popdyn/core.hpp"
#include "popdyn/simulator.hpp"

namespace popdyn::kernels {

/// Winning probabilities (quality order) for K distinct items drawn with
/// probability proportional to `weights`, renormalised after every draw.
/// Sums over all ordered K-sequences; the last draw is folded analytically.
std::vector<double> disposition_sum_serial(std::span<const double> weights, int k);
/// Splits the sum by the first drawn item.
std::vector<double> disposition_sum_parallel(std::span<const double> weights, int k);
/// Picks the parallel kernel unless already inside a parallel region.
std::vector<double> disposition_sum(std::span<const double> weights, int k);

/// B-images of the first `count` permutations in lexicographic order.
struct ImageTable {
    int n_items = 0;
    std::vector<std::uint32_t> image;  // lexicographic index of B(perm)
    std::vector<std::uint8_t> tie;     // 1 when B(perm) had a tie among positive entries
};

ImageTable b_image_table_serial(const MarketConfig& cfg, std::uint64_t count);
/// Splits the index range into contiguous blocks walked with next_permutation.
ImageTable b_image_table_parallel(const MarketConfig& cfg, std::uint64_t count);

/// Independent urn runs; run i uses substream i of `seed`.
std::vector<RunOutcome> run_batch_serial(const MarketConfig& cfg, std::uint64_t rounds, std::uint64_t runs,
                                         std::uint64_t seed, const std::vector<Permutation>& stable = {});
std::vector<RunOutcome> run_batch_parallel(const MarketConfig& cfg, std::uint64_t rounds, std::uint64_t runs,
                                           std::uint64_t seed, const std::vector<Permutation>& stable = {});

}  // namespace popdyn::kernels
