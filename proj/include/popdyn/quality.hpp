#pragma once

// Average quality index, beta-law targets, distances between winning
// distributions and the alpha searches built on them.

#include <optional>
#include <string>
#include <vector>

#include "popdyn/core.hpp"
#include "popdyn/equilibrium.hpp"

namespace popdyn {

/// sum_i i * b_i
double avg_quality(const WinProbVector& b);

/// N - sum_{i<N} i^K / N^K  (alpha = 0, with repetition)
double q_min_with_rep(int n, int k);
/// K (N+1) / (K+1)  (alpha = 0, without repetition)
double q_min_without_rep(int n, int k);

struct TargetDistribution {
    double beta = 0.0;
    std::vector<double> probs;  // probs[i-1] = (N-i+1)^-beta / sum_j j^-beta
    double target_quality = 0.0;
};

TargetDistribution target_distribution(int n, double beta);

enum class Metric { Hellinger, RelativeEntropy, Bhattacharyya };

std::string to_string(Metric m);
/// Accepts "hellinger", "relative_entropy" (or "rel_entropy", "kl") and "bhattacharyya".
Metric parse_metric(const std::string& text);

/// Throws Error("undefined_divergence") for relative entropy when some
/// target entry is 0 where b is positive.
double distance(std::span<const double> b, std::span<const double> target, Metric metric);
double distance(const WinProbVector& b, const TargetDistribution& target, Metric metric);

double delta_q(const WinProbVector& b, const TargetDistribution& target);

/// Expected perceived quality rank of the chosen item when the popularity
/// order is `perm`: classes weigh their own quality order, naive users pick
/// the most popular item. For one identity class this is avg_quality(win_probs).
double average_quality(const Permutation& perm, const MarketConfig& cfg);

/// q-bar of the natural permutation at exponent `alpha` (cfg.alpha ignored).
double natural_quality(const MarketConfig& cfg, double alpha);

/// sum_{i<=K} i^-alpha / sum_{j<=N} j^-alpha
double top_share_ratio(int n, int k, double alpha);

struct AlphaRange {
    double lo = 0.0;
    double hi = 10.0;
};

inline constexpr double kAlphaTolerance = 1e-4;

/// Bisection on the increasing map alpha -> q-bar(natural). The result
/// satisfies |q-bar(alpha*) - target| < 1e-6 N. Throws "target_out_of_range"
/// when the target is not bracketed by the range.
double optimize_alpha_for_quality(const MarketConfig& cfg, double target_q, AlphaRange range = {});

struct DistanceOptimum {
    double alpha = 0.0;
    double value = 0.0;
    std::vector<double> grid;
    std::vector<double> grid_values;
};

/// Grid scan over `alpha_grid` (sorted ascending), then golden-section
/// refinement between the neighbours of the best grid point.
DistanceOptimum optimize_alpha_for_distance(const MarketConfig& cfg, const TargetDistribution& target,
                                            Metric metric, const std::vector<double>& alpha_grid);

/// One row of the per-alpha sweep.
struct AlphaRow {
    double alpha = 0.0;
    double q_bar = 0.0;
    double delta_q = 0.0;
    double hellinger = 0.0;
    double rel_entropy = 0.0;
    double bhattacharyya = 0.0;
};

std::vector<AlphaRow> alpha_sweep(const MarketConfig& cfg, const TargetDistribution& target,
                                  const std::vector<double>& alphas);

struct QualityReport {
    std::vector<double> point_q;    // q-bar per stable point, same order as the set
    std::optional<double> overall;  // Q-bar, when attractiveness is known
    double q_bar = 0.0;             // overall when present, else the single point's value
};

/// Q-bar = sum_f a(f) q-bar(f). Throws "attractiveness_missing" if any point
/// lacks attractiveness, "invalid_attractiveness" if they do not sum to 1.
double overall_quality_multiclass(const std::vector<StablePoint>& points, const MarketConfig& cfg);

QualityReport quality_report(const std::vector<StablePoint>& points, const MarketConfig& cfg);

}  // namespace popdyn
