#include "popdyn/quality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "popdyn/winprob.hpp"

namespace popdyn {

double avg_quality(const WinProbVector& b) {
    long double q = 0;
    for (std::size_t i = 0; i < b.probs.size(); ++i) q += static_cast<long double>(i + 1) * b.probs[i];
    return static_cast<double>(q);
}

double q_min_with_rep(int n, int k) {
    if (n < 1 || k < 1) throw Error("domain_error", "need N >= 1 and K >= 1");
    long double tail = 0;
    for (int i = 1; i < n; ++i) tail += std::pow(static_cast<long double>(i) / n, static_cast<long double>(k));
    return static_cast<double>(n - tail);
}

double q_min_without_rep(int n, int k) {
    if (n < 1 || k < 1 || k > n) throw Error("domain_error", "need 1 <= K <= N");
    return static_cast<double>(k) * (n + 1) / (k + 1);
}

TargetDistribution target_distribution(int n, double beta) {
    if (n < 1) throw Error("domain_error", "N must be positive");
    if (!(beta >= 0)) throw Error("domain_error", "beta must be non-negative");
    TargetDistribution t;
    t.beta = beta;
    t.probs.resize(static_cast<std::size_t>(n));
    const double g = rank_normalizer(n, beta);
    long double q = 0;
    for (int i = 1; i <= n; ++i) {
        const double p = std::pow(static_cast<double>(n - i + 1), -beta) / g;
        t.probs[static_cast<std::size_t>(i - 1)] = p;
        q += static_cast<long double>(i) * p;
    }
    t.target_quality = static_cast<double>(q);
    return t;
}

std::string to_string(Metric m) {
    switch (m) {
        case Metric::Hellinger: return "hellinger";
        case Metric::RelativeEntropy: return "relative_entropy";
        case Metric::Bhattacharyya: return "bhattacharyya";
    }
    return "?";
}

Metric parse_metric(const std::string& text) {
    if (text == "hellinger") return Metric::Hellinger;
    if (text == "relative_entropy" || text == "rel_entropy" || text == "kl") return Metric::RelativeEntropy;
    if (text == "bhattacharyya") return Metric::Bhattacharyya;
    throw Error("usage", "unknown metric '" + text + "'");
}

double distance(std::span<const double> b, std::span<const double> target, Metric metric) {
    if (b.size() != target.size()) throw Error("domain_error", "distributions differ in length");
    long double acc = 0;
    switch (metric) {
        case Metric::Hellinger:
            for (std::size_t i = 0; i < b.size(); ++i) {
                const long double d = std::sqrt(static_cast<long double>(b[i])) - std::sqrt(static_cast<long double>(target[i]));
                acc += d * d;
            }
            return static_cast<double>(std::sqrt(acc) / std::sqrt(2.0L));
        case Metric::RelativeEntropy:
            for (std::size_t i = 0; i < b.size(); ++i) {
                if (b[i] <= 0) continue;  // 0 log 0 = 0
                if (target[i] <= 0) {
                    throw Error("undefined_divergence", "relative entropy: target is 0 where b is positive (item " +
                                                            std::to_string(i + 1) + ")");
                }
                acc += b[i] * (std::log(static_cast<long double>(b[i])) - std::log(static_cast<long double>(target[i])));
            }
            return static_cast<double>(acc);
        case Metric::Bhattacharyya:
            for (std::size_t i = 0; i < b.size(); ++i) acc += std::sqrt(static_cast<long double>(b[i]) * target[i]);
            // rounding can push the coefficient a hair above 1
            return static_cast<double>(-std::log(std::min(acc, 1.0L)));
    }
    return 0.0;
}

double distance(const WinProbVector& b, const TargetDistribution& target, Metric metric) {
    return distance(b.probs, target.probs, metric);
}

double delta_q(const WinProbVector& b, const TargetDistribution& target) {
    return std::fabs(target.target_quality - avg_quality(b));
}

double average_quality(const Permutation& perm, const MarketConfig& cfg) {
    const auto per_class = class_win_probs(perm, cfg);
    const auto classes = cfg.effective_classes();
    const int top = perm.most_popular();
    long double informed = 0;
    long double naive = 0;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        long double q = 0;
        for (std::size_t i = 0; i < per_class[c].size(); ++i) q += static_cast<long double>(i + 1) * per_class[c][i];
        informed += classes[c].probability * q;
        const auto& v = classes[c].quality_order;
        const auto pos = std::find(v.begin(), v.end(), top) - v.begin() + 1;
        naive += classes[c].probability * static_cast<long double>(pos);
    }
    const double fm = cfg.naive_fraction;
    return static_cast<double>((1.0L - fm) * informed + fm * naive);
}

double natural_quality(const MarketConfig& cfg, double alpha) {
    MarketConfig c = cfg;
    c.alpha = alpha;
    return average_quality(Permutation::identity(cfg.n_items), c);
}

double top_share_ratio(int n, int k, double alpha) {
    if (k < 1 || k > n) throw Error("domain_error", "need 1 <= K <= N");
    return rank_normalizer(k, alpha) / rank_normalizer(n, alpha);
}

double optimize_alpha_for_quality(const MarketConfig& cfg, double target_q, AlphaRange range) {
    if (!(range.lo >= 0 && range.hi > range.lo)) throw Error("domain_error", "alpha range must satisfy 0 <= lo < hi");
    const double tol = 1e-6 * cfg.n_items;
    double lo = range.lo;
    double hi = range.hi;
    const double q_lo = natural_quality(cfg, lo);
    const double q_hi = natural_quality(cfg, hi);
    if (std::fabs(q_lo - target_q) < tol) return lo;
    if (std::fabs(q_hi - target_q) < tol) return hi;
    if (target_q < q_lo || target_q > q_hi) {
        throw Error("target_out_of_range", "target q=" + std::to_string(target_q) + " outside [" +
                                               std::to_string(q_lo) + ", " + std::to_string(q_hi) + "]");
    }
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double q = natural_quality(cfg, mid);
        if (std::fabs(q - target_q) < tol && hi - lo < kAlphaTolerance) break;
        if (q < target_q) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return mid;
}

namespace {

double metric_at(const MarketConfig& cfg, const TargetDistribution& target, Metric metric, double alpha) {
    MarketConfig c = cfg;
    c.alpha = alpha;
    return distance(win_probs(Permutation::identity(cfg.n_items), c), target, metric);
}

}  // namespace

DistanceOptimum optimize_alpha_for_distance(const MarketConfig& cfg, const TargetDistribution& target,
                                            Metric metric, const std::vector<double>& alpha_grid) {
    if (alpha_grid.empty()) throw Error("domain_error", "alpha grid is empty");
    if (!std::is_sorted(alpha_grid.begin(), alpha_grid.end())) throw Error("domain_error", "alpha grid must be sorted");
    DistanceOptimum out;
    out.grid = alpha_grid;
    out.grid_values.resize(alpha_grid.size());
    const auto count = static_cast<std::int64_t>(alpha_grid.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < count; ++i) {
        out.grid_values[static_cast<std::size_t>(i)] = metric_at(cfg, target, metric, alpha_grid[static_cast<std::size_t>(i)]);
    }
    const auto best = static_cast<std::size_t>(
        std::min_element(out.grid_values.begin(), out.grid_values.end()) - out.grid_values.begin());
    out.alpha = alpha_grid[best];
    out.value = out.grid_values[best];
    if (alpha_grid.size() < 2) return out;

    // golden section between the neighbours of the best grid point
    double a = alpha_grid[best == 0 ? 0 : best - 1];
    double d = alpha_grid[std::min(best + 1, alpha_grid.size() - 1)];
    const double inv_phi = (std::sqrt(5.0) - 1) / 2;
    double b = d - inv_phi * (d - a);
    double c = a + inv_phi * (d - a);
    double fb = metric_at(cfg, target, metric, b);
    double fc = metric_at(cfg, target, metric, c);
    while (d - a > 1e-6) {
        if (fb < fc) {
            d = c;
            c = b;
            fc = fb;
            b = d - inv_phi * (d - a);
            fb = metric_at(cfg, target, metric, b);
        } else {
            a = b;
            b = c;
            fb = fc;
            c = a + inv_phi * (d - a);
            fc = metric_at(cfg, target, metric, c);
        }
    }
    const double refined = 0.5 * (a + d);
    const double f_refined = metric_at(cfg, target, metric, refined);
    if (f_refined < out.value) {
        out.alpha = refined;
        out.value = f_refined;
    }
    return out;
}

std::vector<AlphaRow> alpha_sweep(const MarketConfig& cfg, const TargetDistribution& target,
                                  const std::vector<double>& alphas) {
    std::vector<AlphaRow> rows(alphas.size());
    const auto count = static_cast<std::int64_t>(alphas.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < count; ++i) {
        MarketConfig c = cfg;
        c.alpha = alphas[static_cast<std::size_t>(i)];
        const auto b = win_probs(Permutation::identity(cfg.n_items), c);
        AlphaRow& row = rows[static_cast<std::size_t>(i)];
        row.alpha = c.alpha;
        row.q_bar = avg_quality(b);
        row.delta_q = delta_q(b, target);
        row.hellinger = distance(b, target, Metric::Hellinger);
        try {
            row.rel_entropy = distance(b, target, Metric::RelativeEntropy);
        } catch (const Error&) {
            row.rel_entropy = std::numeric_limits<double>::infinity();
        }
        row.bhattacharyya = distance(b, target, Metric::Bhattacharyya);
    }
    return rows;
}

double overall_quality_multiclass(const std::vector<StablePoint>& points, const MarketConfig& cfg) {
    if (points.empty()) throw Error("attractiveness_missing", "no stable points");
    long double total_a = 0;
    long double q = 0;
    for (const auto& p : points) {
        if (!p.attractiveness) throw Error("attractiveness_missing", "stable point " + p.perm.to_string() + " has no attractiveness");
        total_a += *p.attractiveness;
        q += *p.attractiveness * average_quality(p.perm, cfg);
    }
    if (std::fabs(static_cast<double>(total_a) - 1.0) > kProbSumTolerance) {
        throw Error("invalid_attractiveness", "attractiveness sums to " + std::to_string(static_cast<double>(total_a)));
    }
    return static_cast<double>(q);
}

QualityReport quality_report(const std::vector<StablePoint>& points, const MarketConfig& cfg) {
    QualityReport r;
    for (const auto& p : points) r.point_q.push_back(average_quality(p.perm, cfg));
    const bool all_a = !points.empty() &&
                       std::all_of(points.begin(), points.end(), [](const StablePoint& p) { return p.attractiveness.has_value(); });
    if (all_a) r.overall = overall_quality_multiclass(points, cfg);
    if (r.overall) {
        r.q_bar = *r.overall;
    } else if (!r.point_q.empty()) {
        r.q_bar = r.point_q.front();
    }
    return r;
}

}  // namespace popdyn
