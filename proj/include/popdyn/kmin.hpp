#pragma once

// Minimum discrimination power K_min: the smallest K for which the natural
// order is the only stable permutation, decided by the stability of the
// critical order 1,...,N,N-1.

#include <optional>

#include "popdyn/core.hpp"

namespace popdyn {

struct KminQuery {
    int n_items = 0;
    double alpha = 0.0;
    RepetitionMode repetition_mode = RepetitionMode::WithRepetition;
    double naive_fraction = 0.0;
    std::optional<KDistribution> k_distribution;
};

/// Upper end of the K scan for the closed-form conditions. With repetition
/// K may exceed N (draws repeat), so the scan is not bounded by N.
inline constexpr long long kKminScanLimit = 1LL << 40;

/// Terms of the critical-permutation inequality at G = G(N, alpha):
/// x = 1 - 2^-alpha / G and y = 1 - 1/G - 2^-alpha / G.
struct CriticalTerms {
    double g = 1.0;
    double x = 0.0;
    double y = 0.0;
    static CriticalTerms at(int n, double alpha);
    static CriticalTerms with_normalizer(double g, double alpha);
};

/// 2 x^K - 1 - y^K, evaluated in log space; negative means the critical
/// permutation is unstable under with-repetition pre-selection.
double critical_gap(const CriticalTerms& t, double k);

/// True iff 2(1 - 2^-a/G)^K <= 1 + (1 - 1/G - 2^-a/G)^K, i.e. the critical
/// permutation is not stable.
bool critical_condition_with_rep(int n, double alpha, long long k);

/// Smallest K >= 2 meeting the with-repetition condition (N >= 2; N = 1 gives 1).
/// The condition changes sign once, so the scan doubles then bisects.
long long kmin_with_rep(int n, double alpha);

/// Same condition with G replaced by zeta(alpha); the N -> infinity limit for alpha > 1.
long long kmin_with_rep_limit(double alpha);

/// Riemann zeta for s > 1: direct sum plus Euler-Maclaurin tail.
double riemann_zeta(double s);

/// Top-two-without-repetition approximation.
bool approx_condition_without_rep(int n, double alpha, long long k);
long long kmin_without_rep_approx(int n, double alpha);

/// Smallest K for which the critical permutation is unstable under the exact
/// engine of `mode` (by the critical-permutation lemma that is K_min). With
/// `full_scan` the whole stable set is enumerated instead (N <= 10).
/// Throws "cap_exceeded" when N > n_cap.
int kmin_exact_enumeration(const KminQuery& q, int n_cap = 30, bool full_scan = false);

/// With-repetition K_min with a fraction f_m of naive users; nullopt when
/// f_m >= 1/2 (no finite K exists).
std::optional<long long> kmin_with_naive(const KminQuery& q);

/// True iff sum_k p_k [2 x^k - 1 - y^k] < 0.
bool kdist_condition(int n, double alpha, const KDistribution& dist);

/// F(delta, v, K) for the alternate permutation whose first misplaced item is
/// the v-th best and sits delta popularity positions too high. Positive
/// means that alternate permutation is stable (with repetition).
double gap_function_F(int delta, int v, long long k, int n, double alpha);

/// Dispatches on q: naive users and K laws use the with-repetition forms,
/// otherwise the closed form (with repetition) or the approximation (without).
std::optional<long long> kmin(const KminQuery& q);

}  // namespace popdyn
