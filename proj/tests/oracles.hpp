#pragma once

// Independent brute-force references. Nothing here calls the library's
// engines; selection probabilities are rebuilt from ranks directly.

#include <algorithm>
#include <cmath>
#include <bit>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace oracle {

using Rational = boost::multiprecision::cpp_rational;

// order: ids by increasing popularity -> rank[i-1] (1 = most popular)
inline std::vector<int> ranks_of(const std::vector<int>& order) {
    const int n = static_cast<int>(order.size());
    std::vector<int> r(order.size());
    for (int j = 0; j < n; ++j) r[static_cast<std::size_t>(order[static_cast<std::size_t>(j)] - 1)] = n - j;
    return r;
}

inline std::vector<long double> selection(const std::vector<int>& order, double alpha) {
    const auto r = ranks_of(order);
    std::vector<long double> p(r.size());
    long double g = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        p[i] = std::pow(static_cast<long double>(r[i]), -static_cast<long double>(alpha));
        g += p[i];
    }
    for (auto& x : p) x /= g;
    return p;
}

// Every ordered K-tuple with repetition; winner = max id. N^K terms.
inline std::vector<double> with_rep(const std::vector<int>& order, double alpha, int k) {
    const auto p = selection(order, alpha);
    const int n = static_cast<int>(p.size());
    std::vector<long double> b(p.size(), 0);
    std::vector<int> seq(static_cast<std::size_t>(k));
    std::function<void(int, long double, int)> rec = [&](int d, long double prob, int best) {
        if (d == k) {
            b[static_cast<std::size_t>(best - 1)] += prob;
            return;
        }
        for (int i = 1; i <= n; ++i) rec(d + 1, prob * p[static_cast<std::size_t>(i - 1)], std::max(best, i));
    };
    rec(0, 1, 0);
    return {b.begin(), b.end()};
}

// Every ordered K-tuple of distinct items, renormalising after each draw.
inline std::vector<double> without_rep(const std::vector<int>& order, double alpha, int k) {
    const auto p = selection(order, alpha);
    const int n = static_cast<int>(p.size());
    std::vector<long double> b(p.size(), 0);
    std::vector<char> used(p.size(), 0);
    std::function<void(int, long double, long double, int)> rec = [&](int d, long double prob, long double left, int best) {
        if (d == k) {
            b[static_cast<std::size_t>(best - 1)] += prob;
            return;
        }
        for (int i = 1; i <= n; ++i) {
            const auto idx = static_cast<std::size_t>(i - 1);
            if (used[idx]) continue;
            used[idx] = 1;
            rec(d + 1, prob * p[idx] / left, left - p[idx], std::max(best, i));
            used[idx] = 0;
        }
    };
    rec(0, 1, 1, 0);
    return {b.begin(), b.end()};
}

// Exact with-repetition b for integer alpha via rationals.
inline std::vector<Rational> with_rep_exact(const std::vector<int>& order, int alpha, int k) {
    const auto r = ranks_of(order);
    const int n = static_cast<int>(r.size());
    std::vector<Rational> p(r.size());
    Rational g = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        Rational x = 1;
        for (int a = 0; a < alpha; ++a) x /= r[i];
        p[i] = x;
        g += x;
    }
    std::vector<Rational> s(r.size() + 1, 0);
    for (int i = 1; i <= n; ++i) s[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(i - 1)] + p[static_cast<std::size_t>(i - 1)] / g;
    std::vector<Rational> b(r.size());
    for (int i = 1; i <= n; ++i) {
        Rational hi = 1, lo = 1;
        for (int j = 0; j < k; ++j) {
            hi *= s[static_cast<std::size_t>(i)];
            lo *= s[static_cast<std::size_t>(i - 1)];
        }
        b[static_cast<std::size_t>(i - 1)] = hi - lo;
    }
    return b;
}

// Uniform K-subsets: winner = max member.
inline std::vector<double> uniform_subsets(int n, int k) {
    std::vector<double> b(static_cast<std::size_t>(n), 0);
    std::uint64_t total = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (std::popcount(mask) != k) continue;
        ++total;
        b[static_cast<std::size_t>(31 - std::countl_zero(mask))] += 1;
    }
    for (auto& x : b) x /= static_cast<double>(total);
    return b;
}

// Popularity order from b: larger b more popular, near-equal values ranked
// by ascending id (lower id more popular), zeros at the bottom by ascending id.
inline std::vector<int> order_from_b(const std::vector<double>& b, bool& tie) {
    const int n = static_cast<int>(b.size());
    std::vector<int> pos, zero;
    for (int i = 1; i <= n; ++i) (b[static_cast<std::size_t>(i - 1)] > 0 ? pos : zero).push_back(i);
    auto close = [&](int a, int c) {
        const double x = b[static_cast<std::size_t>(a - 1)], y = b[static_cast<std::size_t>(c - 1)];
        return std::fabs(x - y) <= 1e-12 * std::max(x, y);
    };
    // selection sort from the most popular down, so the tie rule is explicit
    std::vector<int> most_first;
    std::vector<char> taken(b.size() + 1, 0);
    tie = false;
    for (std::size_t step = 0; step < pos.size(); ++step) {
        int best = -1;
        for (int i : pos) {
            if (taken[static_cast<std::size_t>(i)]) continue;
            if (best < 0) {
                best = i;
                continue;
            }
            if (close(i, best)) {
                if (i < best) best = i;
            } else if (b[static_cast<std::size_t>(i - 1)] > b[static_cast<std::size_t>(best - 1)]) {
                best = i;
            }
        }
        taken[static_cast<std::size_t>(best)] = 1;
        most_first.push_back(best);
    }
    for (std::size_t i = 0; i < pos.size(); ++i) {
        for (std::size_t j = i + 1; j < pos.size(); ++j) {
            if (close(pos[i], pos[j])) tie = true;
        }
    }
    std::vector<int> order(zero.begin(), zero.end());
    order.insert(order.end(), most_first.rbegin(), most_first.rend());
    return order;
}

inline std::vector<std::vector<int>> all_permutations(int n) {
    std::vector<int> v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), 1);
    std::vector<std::vector<int>> out;
    do out.push_back(v);
    while (std::next_permutation(v.begin(), v.end()));
    return out;
}

// Basin sizes by iterating the map from every start until a repeat.
// Returns fixed point -> number of starts ending there; cycles of length > 1
// are reported under an empty key.
template <class Map>
std::map<std::vector<int>, std::uint64_t> basins(int n, Map image) {
    std::map<std::vector<int>, std::vector<int>> next;
    for (const auto& p : all_permutations(n)) next[p] = image(p);
    std::map<std::vector<int>, std::uint64_t> out;
    for (const auto& [start, _] : next) {
        std::vector<int> cur = start;
        std::map<std::vector<int>, int> seen;
        while (!seen.count(cur)) {
            seen[cur] = 1;
            cur = next[cur];
        }
        if (next[cur] == cur) {
            ++out[cur];
        } else {
            ++out[{}];
        }
    }
    return out;
}

}  // namespace oracle
