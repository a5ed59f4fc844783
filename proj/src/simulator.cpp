#include "popdyn/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "popdyn/kernels.hpp"

namespace popdyn {

CheckpointSchedule CheckpointSchedule::log125(std::uint64_t max_round) {
    CheckpointSchedule s;
    for (std::uint64_t decade = 1; decade <= max_round; decade *= 10) {
        for (std::uint64_t m : {1, 2, 5}) {
            if (decade * m <= max_round) s.rounds.push_back(decade * m);
        }
        if (decade > max_round / 10) break;
    }
    if (s.rounds.empty() || s.rounds.back() != max_round) s.rounds.push_back(max_round);
    return s;
}

namespace {

std::vector<double> cumulative(const std::vector<double>& w) {
    std::vector<double> cdf(w.size());
    long double total = 0;
    for (double x : w) total += x;
    long double acc = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        acc += w[i];
        cdf[i] = static_cast<double>(acc / total);
    }
    if (!cdf.empty()) cdf.back() = 1.0;
    return cdf;
}

std::size_t pick(const std::vector<double>& cdf, double u) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

}  // namespace

UrnSampler::UrnSampler(const MarketConfig& cfg)
    : n_(cfg.n_items), mode_(cfg.repetition_mode), naive_(cfg.naive_fraction), fixed_k_(0) {
    validate_config(cfg);
    rank_weight_.resize(static_cast<std::size_t>(n_));
    for (int r = 0; r < n_; ++r) rank_weight_[static_cast<std::size_t>(r)] = std::pow(static_cast<double>(r + 1), -cfg.alpha);
    rank_cdf_ = cumulative(rank_weight_);
    const auto classes = cfg.effective_classes();
    std::vector<double> f;
    for (const auto& c : classes) {
        f.push_back(c.probability);
        std::vector<int> pos(static_cast<std::size_t>(n_));
        for (int i = 0; i < n_; ++i) pos[static_cast<std::size_t>(c.quality_order[static_cast<std::size_t>(i)] - 1)] = i + 1;
        quality_pos_.push_back(std::move(pos));
    }
    class_cdf_ = cumulative(f);
    if (cfg.has_fixed_k()) {
        fixed_k_ = cfg.fixed_k();
    } else {
        k_cdf_ = cumulative(cfg.k_distribution().probs);
    }
}

int UrnSampler::draw_winner(std::span<const int> by_rank, Stream& rng) const {
    if (naive_ > 0 && rng.uniform() < naive_) return by_rank[0];
    std::size_t c = 0;
    if (class_cdf_.size() > 1) c = pick(class_cdf_, rng.uniform());
    int k = fixed_k_;
    if (!k_cdf_.empty()) k = static_cast<int>(pick(k_cdf_, rng.uniform())) + 1;
    const auto& qp = quality_pos_[c];

    int best = 0;
    int best_q = 0;
    auto consider = [&](std::size_t rank) {
        const int item = by_rank[rank];
        const int q = qp[static_cast<std::size_t>(item - 1)];
        if (q > best_q) {
            best_q = q;
            best = item;
        }
    };

    if (mode_ == RepetitionMode::WithRepetition) {
        for (int j = 0; j < k; ++j) consider(pick(rank_cdf_, rng.uniform()));
        return best;
    }

    thread_local std::vector<char> used;
    used.assign(static_cast<std::size_t>(n_), 0);
    for (int j = 0; j < k; ++j) {
        long double remaining = 0;
        for (int r = 0; r < n_; ++r) {
            if (!used[static_cast<std::size_t>(r)]) remaining += rank_weight_[static_cast<std::size_t>(r)];
        }
        const long double target = rng.uniform() * remaining;
        long double acc = 0;
        std::size_t chosen = static_cast<std::size_t>(n_);
        std::size_t last_free = 0;
        for (std::size_t r = 0; r < static_cast<std::size_t>(n_); ++r) {
            if (used[r]) continue;
            last_free = r;
            acc += rank_weight_[r];
            if (target < acc) {
                chosen = r;
                break;
            }
        }
        if (chosen == static_cast<std::size_t>(n_)) chosen = last_free;  // rounding at the top end
        used[chosen] = 1;
        consider(chosen);
    }
    return best;
}

Urn::Urn(const MarketConfig& cfg) : weights_(cfg.effective_initial_weights()) {
    std::vector<double> w(weights_.begin(), weights_.end());
    by_rank_ = rank_with_tiebreak(w).most_popular_first();
    pos_.resize(weights_.size());
    for (std::size_t i = 0; i < by_rank_.size(); ++i) pos_[static_cast<std::size_t>(by_rank_[i] - 1)] = static_cast<int>(i);
    for (auto x : weights_) total_ += x;
}

void Urn::add_win(int item) {
    const auto idx = static_cast<std::size_t>(item - 1);
    const auto w = ++weights_[idx];
    ++total_;
    auto p = static_cast<std::size_t>(pos_[idx]);
    while (p > 0) {
        const int prev = by_rank_[p - 1];
        const auto wp = weights_[static_cast<std::size_t>(prev - 1)];
        if (wp > w || (wp == w && prev < item)) break;
        by_rank_[p] = prev;
        pos_[static_cast<std::size_t>(prev - 1)] = static_cast<int>(p);
        --p;
        ++swaps_;
    }
    by_rank_[p] = item;
    pos_[idx] = static_cast<int>(p);
}

Permutation Urn::permutation() const {
    return Permutation(std::vector<int>(by_rank_.rbegin(), by_rank_.rend()));
}

namespace {

Checkpoint snapshot(const Urn& urn, std::uint64_t round) {
    Checkpoint cp;
    cp.round = round;
    cp.weights = urn.weights();
    cp.normalized.resize(cp.weights.size());
    for (std::size_t i = 0; i < cp.weights.size(); ++i) {
        cp.normalized[i] = static_cast<double>(cp.weights[i]) / static_cast<double>(urn.total());
    }
    return cp;
}

// Counts, for each stable order, the adjacent pairs whose weights run
// against it. A win by x only touches the two pairs around x.
class StableTracker {
public:
    StableTracker(const std::vector<Permutation>& stable, const std::vector<std::int64_t>& w) : stable_(stable) {
        for (const auto& s : stable_) {
            std::vector<int> pos(w.size());
            for (int j = 0; j < s.size(); ++j) pos[static_cast<std::size_t>(s.order()[static_cast<std::size_t>(j)] - 1)] = j;
            int bad = 0;
            for (int j = 0; j + 1 < s.size(); ++j) bad += against(s, w, j);
            pos_.push_back(std::move(pos));
            bad_.push_back(bad);
            last_bad_.push_back(bad > 0 ? std::optional<std::uint64_t>(0) : std::nullopt);
        }
    }

    void on_win(int item, const std::vector<std::int64_t>& w, std::uint64_t round) {
        const auto i = static_cast<std::size_t>(item - 1);
        for (std::size_t k = 0; k < stable_.size(); ++k) {
            const auto& s = stable_[k];
            const int j = pos_[k][i];
            const std::int64_t now = w[i], was = now - 1;
            // pair below: (s_{j-1}, item) may heal; pair above: (item, s_{j+1}) may break
            if (j > 0) {
                const auto lower = w[static_cast<std::size_t>(s.order()[static_cast<std::size_t>(j - 1)] - 1)];
                bad_[k] -= (lower > was) - (lower > now);
            }
            if (j + 1 < s.size()) {
                const auto upper = w[static_cast<std::size_t>(s.order()[static_cast<std::size_t>(j + 1)] - 1)];
                bad_[k] += (now > upper) - (was > upper);
            }
            if (bad_[k] > 0) last_bad_[k] = round;
        }
    }

    /// Index of a stable order the weights currently agree with, preferring `strict`.
    std::optional<std::size_t> matched(const Permutation& strict) const {
        std::optional<std::size_t> any;
        for (std::size_t k = 0; k < stable_.size(); ++k) {
            if (bad_[k] != 0) continue;
            if (stable_[k] == strict) return k;
            if (!any) any = k;
        }
        return any;
    }

    std::uint64_t since(std::size_t k) const { return last_bad_[k] ? *last_bad_[k] + 1 : 0; }

private:
    static int against(const Permutation& s, const std::vector<std::int64_t>& w, int j) {
        const auto a = w[static_cast<std::size_t>(s.order()[static_cast<std::size_t>(j)] - 1)];
        const auto b = w[static_cast<std::size_t>(s.order()[static_cast<std::size_t>(j + 1)] - 1)];
        return a > b ? 1 : 0;
    }

    const std::vector<Permutation>& stable_;
    std::vector<std::vector<int>> pos_;
    std::vector<int> bad_;
    std::vector<std::optional<std::uint64_t>> last_bad_;
};

}  // namespace

UrnTrace simulate_run(const MarketConfig& cfg, std::uint64_t rounds, std::uint64_t seed,
                      const CheckpointSchedule& schedule, const std::vector<Permutation>& stable,
                      std::uint64_t stream_index) {
    if (rounds < 1) throw Error("domain_error", "rounds must be at least 1");
    const UrnSampler sampler(cfg);
    Urn urn(cfg);
    Stream rng(seed, stream_index);
    UrnTrace trace;
    trace.config = cfg;
    trace.seed = seed;

    std::size_t next_cp = 0;
    const auto& cps = schedule.rounds;
    while (next_cp < cps.size() && cps[next_cp] == 0) {
        trace.checkpoints.push_back(snapshot(urn, 0));
        ++next_cp;
    }
    StableTracker tracker(stable, urn.weights());
    for (std::uint64_t n = 1; n <= rounds; ++n) {
        const int winner = sampler.draw_winner(urn.by_rank(), rng);
        urn.add_win(winner);
        if (!stable.empty()) tracker.on_win(winner, urn.weights(), n);
        while (next_cp < cps.size() && cps[next_cp] == n) {
            trace.checkpoints.push_back(snapshot(urn, n));
            ++next_cp;
        }
    }
    trace.final_permutation = urn.permutation();
    if (const auto k = tracker.matched(trace.final_permutation)) {
        trace.hit_round = tracker.since(*k);
        trace.hit_point = stable[*k];
    }
    return trace;
}

RunOutcome run_outcome(const MarketConfig& cfg, std::uint64_t rounds, std::uint64_t seed, std::uint64_t run_index,
                       const std::vector<Permutation>& stable) {
    auto trace = simulate_run(cfg, rounds, seed, CheckpointSchedule::final_only(rounds), stable, run_index);
    return {std::move(trace.checkpoints.back().weights), std::move(trace.final_permutation), trace.hit_round,
            std::move(trace.hit_point)};
}

std::vector<double> frozen_win_frequencies(const MarketConfig& cfg, const Permutation& perm, std::uint64_t draws,
                                           std::uint64_t seed) {
    if (perm.size() != cfg.n_items) throw Error("domain_error", "permutation size differs from N");
    const UrnSampler sampler(cfg);
    const auto by_rank = perm.most_popular_first();
    Stream rng(seed, 0);
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(cfg.n_items), 0);
    for (std::uint64_t d = 0; d < draws; ++d) ++counts[static_cast<std::size_t>(sampler.draw_winner(by_rank, rng) - 1)];
    std::vector<double> freq(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) freq[i] = static_cast<double>(counts[i]) / static_cast<double>(draws);
    return freq;
}

namespace {

void fill_frequencies(const MarketConfig& cfg, const std::vector<RunOutcome>& runs, std::uint64_t rounds,
                      RunStatistics& st) {
    const auto n = static_cast<std::size_t>(cfg.n_items);
    const auto init = cfg.effective_initial_weights();
    const double m = static_cast<double>(runs.size());
    st.win_frequency.assign(n, 0.0);
    st.win_frequency_se.assign(n, 0.0);
    std::vector<long double> sum(n, 0), sum2(n, 0);
    const int k = cfg.has_fixed_k() ? cfg.fixed_k() : 1;
    std::uint64_t ordered = 0;
    std::uint64_t top_other = 0;
    for (const auto& r : runs) {
        for (std::size_t i = 0; i < n; ++i) {
            const long double f = static_cast<long double>(r.final_weights[i] - init[i]) / rounds;
            sum[i] += f;
            sum2[i] += f * f;
        }
        bool ok = true;
        for (int i = k; i < cfg.n_items; ++i) {
            if (!(r.final_weights[static_cast<std::size_t>(i - 1)] < r.final_weights[static_cast<std::size_t>(i)])) ok = false;
        }
        if (ok) ++ordered;
        if (r.final_permutation.most_popular() != cfg.n_items) ++top_other;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const long double mean = sum[i] / m;
        st.win_frequency[i] = static_cast<double>(mean);
        if (runs.size() > 1) {
            const long double var = std::max(0.0L, (sum2[i] - m * mean * mean) / (m - 1));
            st.win_frequency_se[i] = static_cast<double>(std::sqrt(var / m));
        } else {
            st.win_frequency_se[i] = std::sqrt(static_cast<double>(mean * (1 - mean)) / static_cast<double>(rounds));
        }
    }
    st.ordering_event_frequency = static_cast<double>(ordered) / m;
    st.top_not_best_frequency = static_cast<double>(top_other) / m;
}

}  // namespace

RunStatistics estimate_win_frequencies(const MarketConfig& cfg, std::uint64_t rounds, std::uint64_t n_runs,
                                       std::uint64_t seed) {
    if (n_runs < 1) throw Error("domain_error", "need at least one run");
    const auto runs = kernels::run_batch_parallel(cfg, rounds, n_runs, seed);
    RunStatistics st;
    st.runs = n_runs;
    st.rounds = rounds;
    fill_frequencies(cfg, runs, rounds, st);
    return st;
}

std::optional<double> censored_median(const std::vector<std::optional<std::uint64_t>>& samples) {
    if (samples.empty()) return std::nullopt;
    auto v = samples;
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
        if (!a) return false;
        if (!b) return true;
        return *a < *b;
    });
    const std::size_t n = v.size();
    if (n % 2 == 1) {
        if (!v[n / 2]) return std::nullopt;
        return static_cast<double>(*v[n / 2]);
    }
    if (!v[n / 2 - 1] || !v[n / 2]) return std::nullopt;
    return 0.5 * (static_cast<double>(*v[n / 2 - 1]) + static_cast<double>(*v[n / 2]));
}

RunStatistics time_to_stable_point(const MarketConfig& cfg, std::uint64_t n_runs, std::uint64_t max_rounds,
                                   std::uint64_t seed, const std::vector<Permutation>& stable) {
    if (stable.empty()) throw Error("empty_stable_set", "time to stable point needs at least one stable permutation");
    if (n_runs < 1) throw Error("domain_error", "need at least one run");
    const auto runs = kernels::run_batch_parallel(cfg, max_rounds, n_runs, seed, stable);
    RunStatistics st;
    st.runs = n_runs;
    st.rounds = max_rounds;
    fill_frequencies(cfg, runs, max_rounds, st);
    for (const auto& p : stable) st.hit_counts.emplace_back(p, 0);
    for (const auto& r : runs) {
        st.hit_rounds.push_back(r.hit_round);
        if (!r.hit_round) {
            ++st.not_converged;
            continue;
        }
        for (auto& [p, count] : st.hit_counts) {
            if (p == *r.hit_point) ++count;
        }
    }
    st.median_hit_round = censored_median(st.hit_rounds);
    return st;
}

double naive_threshold(int n, int k) {
    const double kk = static_cast<double>(k) * (k - 1);
    return kk / (static_cast<double>(n) * (n - 1) + kk);
}

NaiveDisruption naive_disruption_check(int n, int k, double fm, std::uint64_t rounds, std::uint64_t n_runs,
                                       std::uint64_t seed, std::optional<int> leader) {
    MarketConfig cfg = MarketConfig::basic(n, k, 0.0, RepetitionMode::WithoutRepetition);
    cfg.naive_fraction = fm;
    if (leader) {
        if (*leader < 1 || *leader > n) throw Error("domain_error", "leader must be an item id");
        cfg.initial_weights.assign(static_cast<std::size_t>(n), 1);
        cfg.initial_weights[static_cast<std::size_t>(*leader - 1)] = 2;
    }
    NaiveDisruption out;
    out.threshold = naive_threshold(n, k);
    out.stats = estimate_win_frequencies(cfg, rounds, n_runs, seed);
    return out;
}

void write_trace_csv(const UrnTrace& trace, std::ostream& out) {
    out << "round,item_id,weight,normalized_weight\n";
    char buf[64];
    for (const auto& cp : trace.checkpoints) {
        for (std::size_t i = 0; i < cp.weights.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", cp.normalized[i]);
            out << cp.round << ',' << (i + 1) << ',' << cp.weights[i] << ',' << buf << '\n';
        }
    }
}

}  // namespace popdyn
