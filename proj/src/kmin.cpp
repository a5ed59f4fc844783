#include "popdyn/kmin.hpp"

#include <cmath>
#include <string>

#include "popdyn/equilibrium.hpp"
#include "popdyn/winprob.hpp"

namespace popdyn {

CriticalTerms CriticalTerms::with_normalizer(double g, double alpha) {
    CriticalTerms t;
    t.g = g;
    const double top = std::pow(2.0, -alpha) / g;  // selection prob of the rank-2 slot
    t.x = 1.0 - top;
    t.y = std::max(0.0, 1.0 - 1.0 / g - top);
    return t;
}

CriticalTerms CriticalTerms::at(int n, double alpha) {
    return with_normalizer(rank_normalizer(n, alpha), alpha);
}

namespace {

// base^k for base in [0,1], through exp/log1p so tiny complements survive.
double power_from_complement(double complement, double k) {
    if (complement >= 1.0) return 0.0;
    return std::exp(k * std::log1p(-complement));
}

double pow_unit(double base, double k) {
    if (base <= 0) return 0.0;
    return power_from_complement(1.0 - base, k);
}

template <class Pred>
long long first_true_galloping(long long start, Pred pred) {
    if (pred(start)) return start;
    long long lo = start;  // pred(lo) false
    long long hi = start * 2;
    while (!pred(hi)) {
        lo = hi;
        hi *= 2;
        if (hi > kKminScanLimit) throw Error("not_found", "K scan exceeded its limit without meeting the condition");
    }
    while (hi - lo > 1) {
        const long long mid = lo + (hi - lo) / 2;
        if (pred(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

}  // namespace

double critical_gap(const CriticalTerms& t, double k) {
    // x = 1 - 2^-a/G is close to 1 for large G; keep the complement exact
    const double x_pow = power_from_complement(1.0 - t.x, k);
    const double y_pow = pow_unit(t.y, k);
    return 2.0 * x_pow - 1.0 - y_pow;
}

bool critical_condition_with_rep(int n, double alpha, long long k) {
    if (n < 2) throw Error("domain_error", "critical permutation needs N >= 2");
    if (k < 1) throw Error("domain_error", "K must be at least 1");
    const auto t = CriticalTerms::at(n, alpha);
    return critical_gap(t, static_cast<double>(k)) <= 0.0;
}

namespace {

long long kmin_from_terms(const CriticalTerms& t) {
    // K = 1 never destabilises: for alpha > 0 every order is stable, for
    // alpha = 0 every winning probability ties. The scan starts at 2.
    return first_true_galloping(2, [&](long long k) { return critical_gap(t, static_cast<double>(k)) <= 0.0; });
}

}  // namespace

long long kmin_with_rep(int n, double alpha) {
    if (n < 1) throw Error("domain_error", "N must be positive");
    if (alpha < 0) throw Error("domain_error", "alpha must be non-negative");
    if (n == 1) return 1;
    return kmin_from_terms(CriticalTerms::at(n, alpha));
}

double riemann_zeta(double s) {
    if (!(s > 1)) throw Error("domain_error", "zeta series needs s > 1");
    constexpr int m = 1000;
    long double sum = 0;
    for (int i = 1; i < m; ++i) sum += std::pow(static_cast<long double>(i), -static_cast<long double>(s));
    const long double M = m;
    const long double ls = s;
    // Euler-Maclaurin tail from M to infinity
    sum += std::pow(M, 1 - ls) / (ls - 1) + std::pow(M, -ls) / 2 + ls * std::pow(M, -ls - 1) / 12 -
           ls * (ls + 1) * (ls + 2) * std::pow(M, -ls - 3) / 720;
    return static_cast<double>(sum);
}

long long kmin_with_rep_limit(double alpha) {
    return kmin_from_terms(CriticalTerms::with_normalizer(riemann_zeta(alpha), alpha));
}

bool approx_condition_without_rep(int n, double alpha, long long k) {
    if (n < 2) throw Error("domain_error", "critical permutation needs N >= 2");
    if (k < 1) throw Error("domain_error", "K must be at least 1");
    const auto t = CriticalTerms::at(n, alpha);
    const double kk = static_cast<double>(k);
    const double z_complement = 1.0 / t.g;  // 1 - z with z = 1 - 1/G
    if (t.y <= 0) {
        // no lower items: the pair is always drawn together once K >= 2
        return k >= 2;
    }
    const double log_lhs = std::log(2.0) + (kk - 1) * (std::log(t.y) - std::log1p(-z_complement));
    const double y_k = pow_unit(t.y, kk);
    const double z_k = power_from_complement(z_complement, kk);
    const double log_rhs = std::log1p(-y_k) - std::log1p(-z_k);
    return log_lhs <= log_rhs;
}

long long kmin_without_rep_approx(int n, double alpha) {
    if (n < 1) throw Error("domain_error", "N must be positive");
    if (n == 1) return 1;
    // K distinct items cannot exceed N; running out means a bug upstream
    for (long long k = 2; k <= n; ++k) {
        if (approx_condition_without_rep(n, alpha, k)) return k;
    }
    throw Error("not_found", "approximate K scan reached K = N without a solution");
}

int kmin_exact_enumeration(const KminQuery& q, int n_cap, bool full_scan) {
    const int n = q.n_items;
    if (n < 1) throw Error("domain_error", "N must be positive");
    if (n > n_cap) {
        throw Error("cap_exceeded", "exact K_min enumeration limited to N <= " + std::to_string(n_cap));
    }
    if (q.k_distribution) throw Error("domain_error", "exact K_min enumeration takes a fixed K");
    if (n == 1) return 1;
    const int k_limit = q.repetition_mode == RepetitionMode::WithoutRepetition ? n : 4096;
    const auto critical = Permutation::critical(n);
    for (int k = 2; k <= k_limit; ++k) {
        if (k > n) {
            // with repetition K may exceed N; evaluate the engine directly
            auto b = win_probs_with_rep(critical, q.alpha, k);
            if (q.naive_fraction > 0) b = blend_naive(b, critical.most_popular(), q.naive_fraction);
            std::vector<int> order(static_cast<std::size_t>(n));
            bool tie = false;
            b_image_order(b.probs, order, tie);
            if (tie || Permutation(order) != critical) return k;
            continue;
        }
        MarketConfig cfg = MarketConfig::basic(n, k, q.alpha, q.repetition_mode);
        cfg.naive_fraction = q.naive_fraction;
        if (full_scan) {
            const auto set = enumerate_stable_points(cfg, SearchStrategy::exhaustive());
            if (set.points.size() == 1 && set.points.front().perm.is_natural()) return k;
        } else if (!is_stable(critical, cfg)) {
            return k;
        }
    }
    throw Error("not_found", "no K up to " + std::to_string(k_limit) + " destabilises the critical permutation");
}

std::optional<long long> kmin_with_naive(const KminQuery& q) {
    const double fm = q.naive_fraction;
    if (!(fm >= 0 && fm <= 1)) throw Error("domain_error", "f_m must lie in [0,1]");
    if (fm >= 0.5) return std::nullopt;
    if (fm == 0) return kmin_with_rep(q.n_items, q.alpha);
    if (q.n_items < 2) return 1;
    const auto t = CriticalTerms::at(q.n_items, q.alpha);
    return first_true_galloping(1, [&](long long k) {
        return fm + (1.0 - fm) * critical_gap(t, static_cast<double>(k)) < 0.0;
    });
}

bool kdist_condition(int n, double alpha, const KDistribution& dist) {
    long double total = 0;
    for (double p : dist.probs) total += p;
    if (std::fabs(static_cast<double>(total) - 1.0) > kProbSumTolerance) {
        throw Error("domain_error", "K distribution does not sum to 1");
    }
    if (n < 2) throw Error("domain_error", "critical permutation needs N >= 2");
    const auto t = CriticalTerms::at(n, alpha);
    long double acc = 0;
    for (int k = 1; k <= dist.max_k(); ++k) {
        if (dist.p(k) > 0) acc += dist.p(k) * critical_gap(t, k);
    }
    return acc < 0;
}

double gap_function_F(int delta, int v, long long k, int n, double alpha) {
    if (delta < 1 || delta > n - 1 || v < delta + 1 || v > n || k < 1) {
        throw Error("domain_error", "F(delta, v, K) needs 1 <= delta <= N-1, delta+1 <= v <= N, K >= 1");
    }
    const long double g = rank_normalizer(n, alpha);
    long double s_star = 0;
    for (int i = v + 1; i <= n; ++i) s_star += std::pow(static_cast<long double>(i), -static_cast<long double>(alpha)) / g;
    const long double a = std::pow(static_cast<long double>(v - delta), -static_cast<long double>(alpha)) / g;
    const long double c = std::pow(static_cast<long double>(v - delta + 1), -static_cast<long double>(alpha)) / g;
    const long double kk = static_cast<long double>(k);
    const long double f = 2 * std::pow(s_star + a, kk) - std::pow(s_star, kk) - std::pow(s_star + a + c, kk);
    return static_cast<double>(f);
}

std::optional<long long> kmin(const KminQuery& q) {
    if (q.naive_fraction > 0) return kmin_with_naive(q);
    if (q.k_distribution) {
        // smallest shift of the law's mass is not defined; report whether it suffices
        throw Error("domain_error", "use kdist_condition for K distributions");
    }
    if (q.repetition_mode == RepetitionMode::WithRepetition) return kmin_with_rep(q.n_items, q.alpha);
    return kmin_without_rep_approx(q.n_items, q.alpha);
}

}  // namespace popdyn
