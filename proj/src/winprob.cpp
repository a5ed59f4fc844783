#include "popdyn/winprob.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include "popdyn/kernels.hpp"

namespace popdyn {

std::uint64_t enumeration_budget() {
    if (const char* env = std::getenv("POPDYN_MAX_ENUM")) {
        try {
            const double v = std::stod(env);
            if (v >= 1) return static_cast<std::uint64_t>(v);
        } catch (const std::exception&) {
        }
        throw Error("invalid_config", std::string("POPDYN_MAX_ENUM is not a positive number: ") + env);
    }
    return kDefaultEnumerationBudget;
}

std::uint64_t disposition_count(int n, int k) {
    std::uint64_t count = 1;
    for (int i = 0; i < k; ++i) {
        const auto factor = static_cast<std::uint64_t>(n - i);
        if (factor != 0 && count > std::numeric_limits<std::uint64_t>::max() / factor) {
            return std::numeric_limits<std::uint64_t>::max();
        }
        count *= factor;
    }
    return count;
}

double rank_normalizer(int n, double alpha) {
    long double g = 0;
    for (int i = 1; i <= n; ++i) g += std::pow(static_cast<long double>(i), -static_cast<long double>(alpha));
    return static_cast<double>(g);
}

namespace {

SelectionProbVector selection_from_ranks(const std::vector<int>& ranks, double alpha) {
    const int n = static_cast<int>(ranks.size());
    const double g = rank_normalizer(n, alpha);
    SelectionProbVector out;
    out.probs.resize(ranks.size());
    out.cumulants.resize(ranks.size());
    long double acc = 0;
    for (int i = 0; i < n; ++i) {
        const double r = ranks[static_cast<std::size_t>(i)];
        out.probs[static_cast<std::size_t>(i)] = std::pow(r, -alpha) / g;
        acc += out.probs[static_cast<std::size_t>(i)];
        out.cumulants[static_cast<std::size_t>(i)] = static_cast<double>(acc);
    }
    // s_N is 1 by construction; pin it against accumulated rounding.
    if (n > 0) out.cumulants.back() = 1.0;
    return out;
}

std::vector<double> order_weights_by_quality(const Permutation& perm, double alpha) {
    const auto ranks = perm.ranks();
    std::vector<double> w(ranks.size());
    for (std::size_t i = 0; i < ranks.size(); ++i) w[i] = std::pow(static_cast<double>(ranks[i]), -alpha);
    return w;
}

void check_k(int n, int k) {
    if (k < 1 || k > n) throw Error("domain_error", "K must lie in 1..N");
}

}  // namespace

SelectionProbVector selection_probs(const RankVector& ranks, double alpha) {
    if (!ranks.is_strict()) throw Error("invalid_ranks", "selection probabilities need strict ranks");
    return selection_from_ranks(ranks.ranks, alpha);
}

SelectionProbVector selection_probs(const Permutation& perm, double alpha) {
    return selection_from_ranks(perm.ranks(), alpha);
}

WinProbVector win_probs_uniform(int n, int k) {
    check_k(n, k);
    // C(i-1,K-1)/C(N,K) via the ratio C(i,K-1)... built incrementally in long double
    WinProbVector b;
    b.probs.assign(static_cast<std::size_t>(n), 0.0);
    long double choose_nk = 1;
    for (int j = 1; j <= k; ++j) choose_nk = choose_nk * (n - k + j) / j;
    long double c = 1;  // C(K-1, K-1)
    for (int i = k; i <= n; ++i) {
        b.probs[static_cast<std::size_t>(i - 1)] = static_cast<double>(c / choose_nk);
        // C(i, K-1) = C(i-1, K-1) * i / (i - K + 1)
        c = c * i / (i - k + 1);
    }
    return b;
}

std::vector<double> with_rep_engine(std::span<const double> weights, const KDistribution& dist) {
    const std::size_t n = weights.size();
    long double total = 0;
    for (double w : weights) total += w;
    std::vector<double> s(n);
    long double acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += weights[i];
        s[i] = static_cast<double>(acc / total);
    }
    if (n > 0) s.back() = 1.0;
    std::vector<double> b(n, 0.0);
    for (int k = 1; k <= dist.max_k(); ++k) {
        const double pk = dist.p(k);
        if (pk == 0) continue;
        double prev = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double cur = std::pow(s[i], k);
            b[i] += pk * (cur - prev);
            prev = cur;
        }
    }
    return b;
}

std::vector<double> without_rep_engine(std::span<const double> weights, const KDistribution& dist,
                                       std::uint64_t budget) {
    const int n = static_cast<int>(weights.size());
    std::vector<double> b(weights.size(), 0.0);
    for (int k = 1; k <= dist.max_k(); ++k) {
        const double pk = dist.p(k);
        if (pk == 0) continue;
        check_k(n, k);
        if (disposition_count(n, k) > budget) {
            throw Error("budget_exceeded", "without-repetition enumeration needs " +
                                               std::to_string(disposition_count(n, k)) +
                                               " sequences, budget is " + std::to_string(budget));
        }
        const auto bk = kernels::disposition_sum(weights, k);
        for (std::size_t i = 0; i < b.size(); ++i) b[i] += pk * bk[i];
    }
    return b;
}

WinProbVector win_probs_with_rep(const Permutation& perm, double alpha, int k) {
    if (k < 1) throw Error("domain_error", "K must be at least 1");
    const auto w = order_weights_by_quality(perm, alpha);
    return WinProbVector{with_rep_engine(w, KDistribution::degenerate(k))};
}

WinProbVector win_probs_without_rep(const Permutation& perm, double alpha, int k, std::uint64_t budget) {
    check_k(perm.size(), k);
    const auto w = order_weights_by_quality(perm, alpha);
    return WinProbVector{without_rep_engine(w, KDistribution::degenerate(k), budget)};
}

double preselection_sequence_prob(const RankVector& ranks, std::span<const int> sequence, double alpha) {
    const int n = ranks.size();
    std::vector<char> used(static_cast<std::size_t>(n), 0);
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = std::pow(static_cast<double>(ranks.ranks[static_cast<std::size_t>(i)]), -alpha);
    double prob = 1.0;
    for (int item : sequence) {
        if (item < 1 || item > n) throw Error("domain_error", "sequence item outside 1..N");
        if (used[static_cast<std::size_t>(item - 1)]) throw Error("domain_error", "sequence repeats an item");
        long double remaining = 0;
        for (int i = 0; i < n; ++i) {
            if (!used[static_cast<std::size_t>(i)]) remaining += w[static_cast<std::size_t>(i)];
        }
        prob *= static_cast<double>(w[static_cast<std::size_t>(item - 1)] / remaining);
        used[static_cast<std::size_t>(item - 1)] = 1;
    }
    return prob;
}

WinProbVector blend_naive(const WinProbVector& b, int current_top, double naive_fraction) {
    if (!(naive_fraction >= 0 && naive_fraction <= 1)) throw Error("domain_error", "f_m must lie in [0,1]");
    if (current_top < 1 || current_top > b.size()) throw Error("domain_error", "current top outside 1..N");
    WinProbVector out = b;
    for (double& x : out.probs) x *= (1.0 - naive_fraction);
    out.probs[static_cast<std::size_t>(current_top - 1)] += naive_fraction;
    return out;
}

WinProbVector blend_k_distribution(const std::map<int, WinProbVector>& per_k, const KDistribution& dist) {
    for (int k = 1; k <= dist.max_k(); ++k) {
        if (dist.p(k) > 0 && !per_k.contains(k)) {
            throw Error("mismatched_support", "no winning probabilities for K=" + std::to_string(k));
        }
    }
    std::size_t n = 0;
    for (const auto& [k, b] : per_k) {
        if (dist.p(k) <= 0) throw Error("mismatched_support", "K=" + std::to_string(k) + " is outside the support");
        if (n != 0 && b.probs.size() != n) throw Error("mismatched_support", "winning vectors differ in length");
        n = b.probs.size();
    }
    WinProbVector out;
    out.probs.assign(n, 0.0);
    for (const auto& [k, b] : per_k) {
        for (std::size_t i = 0; i < n; ++i) out.probs[i] += dist.p(k) * b.probs[i];
    }
    return out;
}

WinProbEvaluator::WinProbEvaluator(const MarketConfig& cfg, std::uint64_t budget)
    : cfg_(validate_config(cfg)),
      classes_(cfg.effective_classes()),
      dist_(cfg.k_distribution()),
      budget_(budget) {
    const int n = cfg_.n_items;
    rank_weight_.resize(static_cast<std::size_t>(n));
    for (int r = 1; r <= n; ++r) rank_weight_[static_cast<std::size_t>(r - 1)] = std::pow(static_cast<double>(r), -cfg_.alpha);
    item_weight_.resize(static_cast<std::size_t>(n));
    class_weight_.resize(static_cast<std::size_t>(n));
    if (cfg_.repetition_mode == RepetitionMode::WithoutRepetition) {
        for (int k = 1; k <= dist_.max_k(); ++k) {
            if (dist_.p(k) > 0 && disposition_count(n, k) > budget_) {
                throw Error("budget_exceeded", "without-repetition enumeration needs " +
                                                   std::to_string(disposition_count(n, k)) +
                                                   " sequences, budget is " + std::to_string(budget_));
            }
        }
    }
}

void WinProbEvaluator::evaluate(std::span<const int> order, std::span<double> b_out) {
    const int n = cfg_.n_items;
    for (int j = 0; j < n; ++j) {
        item_weight_[static_cast<std::size_t>(order[static_cast<std::size_t>(j)] - 1)] =
            rank_weight_[static_cast<std::size_t>(n - 1 - j)];
    }
    std::fill(b_out.begin(), b_out.end(), 0.0);
    for (const auto& cls : classes_) {
        if (cls.probability == 0) continue;
        for (int i = 0; i < n; ++i) {
            class_weight_[static_cast<std::size_t>(i)] =
                item_weight_[static_cast<std::size_t>(cls.quality_order[static_cast<std::size_t>(i)] - 1)];
        }
        const auto bc = cfg_.repetition_mode == RepetitionMode::WithRepetition
                            ? with_rep_engine(class_weight_, dist_)
                            : without_rep_engine(class_weight_, dist_, budget_);
        for (int i = 0; i < n; ++i) {
            b_out[static_cast<std::size_t>(cls.quality_order[static_cast<std::size_t>(i)] - 1)] +=
                cls.probability * bc[static_cast<std::size_t>(i)];
        }
    }
    if (cfg_.naive_fraction > 0) {
        for (double& x : b_out) x *= (1.0 - cfg_.naive_fraction);
        b_out[static_cast<std::size_t>(order[static_cast<std::size_t>(n - 1)] - 1)] += cfg_.naive_fraction;
    }
}

std::vector<std::vector<double>> class_win_probs(const Permutation& perm, const MarketConfig& cfg) {
    validate_config(cfg);
    if (perm.size() != cfg.n_items) throw Error("domain_error", "permutation size differs from N");
    const auto item_w = order_weights_by_quality(perm, cfg.alpha);
    const auto dist = cfg.k_distribution();
    std::vector<std::vector<double>> out;
    for (const auto& cls : cfg.effective_classes()) {
        std::vector<double> w(item_w.size());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = item_w[static_cast<std::size_t>(cls.quality_order[i] - 1)];
        out.push_back(cfg.repetition_mode == RepetitionMode::WithRepetition
                          ? with_rep_engine(w, dist)
                          : without_rep_engine(w, dist, enumeration_budget()));
    }
    return out;
}

WinProbVector win_probs_multiclass(const Permutation& perm, const MarketConfig& cfg) {
    const auto per_class = class_win_probs(perm, cfg);
    const auto classes = cfg.effective_classes();
    WinProbVector b;
    b.probs.assign(static_cast<std::size_t>(cfg.n_items), 0.0);
    for (std::size_t c = 0; c < classes.size(); ++c) {
        for (std::size_t i = 0; i < b.probs.size(); ++i) {
            b.probs[static_cast<std::size_t>(classes[c].quality_order[i] - 1)] += classes[c].probability * per_class[c][i];
        }
    }
    return b;
}

WinProbVector win_probs(const Permutation& perm, const MarketConfig& cfg) {
    auto b = win_probs_multiclass(perm, cfg);
    if (cfg.naive_fraction > 0) b = blend_naive(b, perm.most_popular(), cfg.naive_fraction);
    return b;
}

}  // namespace popdyn
