#include "popdyn/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "popdyn/kernels.hpp"
#include "popdyn/rng.hpp"
#include "popdyn/winprob.hpp"

namespace popdyn {

namespace {

bool near_tie(double a, double b) {
    return std::fabs(a - b) <= kTieTolerance * std::max(std::fabs(a), std::fabs(b));
}

}  // namespace

void b_image_order(std::span<const double> b, std::span<int> order_out, bool& has_tie) {
    const int n = static_cast<int>(b.size());
    // most-popular-first scratch; N is small so a local buffer is fine
    std::vector<int> ids;
    ids.reserve(static_cast<std::size_t>(n));
    int zeros = 0;
    for (int i = 1; i <= n; ++i) {
        if (b[static_cast<std::size_t>(i - 1)] > 0) {
            ids.push_back(i);
        } else {
            ++zeros;
        }
    }
    std::sort(ids.begin(), ids.end(), [&](int x, int y) {
        const double bx = b[static_cast<std::size_t>(x - 1)];
        const double by = b[static_cast<std::size_t>(y - 1)];
        if (bx != by) return bx > by;
        return x < y;
    });
    has_tie = false;
    // runs of near-equal values are ordered by ascending id
    std::size_t start = 0;
    for (std::size_t j = 1; j <= ids.size(); ++j) {
        const bool same = j < ids.size() &&
                          near_tie(b[static_cast<std::size_t>(ids[j - 1] - 1)], b[static_cast<std::size_t>(ids[j] - 1)]);
        if (same) continue;
        if (j - start > 1) {
            has_tie = true;
            std::sort(ids.begin() + static_cast<std::ptrdiff_t>(start), ids.begin() + static_cast<std::ptrdiff_t>(j));
        }
        start = j;
    }
    // increasing popularity: zero block (ascending id), then positives reversed
    std::size_t pos = 0;
    for (int i = 1; i <= n; ++i) {
        if (!(b[static_cast<std::size_t>(i - 1)] > 0)) order_out[pos++] = i;
    }
    for (auto it = ids.rbegin(); it != ids.rend(); ++it) order_out[pos++] = *it;
    (void)zeros;
}

BMapResult apply_B(const Permutation& perm, const MarketConfig& cfg) {
    validate_config(cfg);
    if (perm.size() != cfg.n_items) throw Error("domain_error", "permutation size differs from N");
    BMapResult out;
    out.input_perm = perm;
    out.b = win_probs(perm, cfg);
    std::vector<int> order(static_cast<std::size_t>(cfg.n_items));
    b_image_order(out.b.probs, order, out.has_tie);
    out.output_perm = Permutation(std::move(order));
    return out;
}

bool is_stable(const Permutation& perm, const MarketConfig& cfg) {
    const auto r = apply_B(perm, cfg);
    return !r.has_tie && r.output_perm == perm;
}

bool StablePointSet::contains(const Permutation& perm) const {
    return std::any_of(points.begin(), points.end(), [&](const StablePoint& p) { return p.perm == perm; });
}

std::vector<Permutation> StablePointSet::permutations() const {
    std::vector<Permutation> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(p.perm);
    return out;
}

namespace {

std::vector<StablePoint> stable_from_table(const kernels::ImageTable& table, const MarketConfig& cfg) {
    std::vector<StablePoint> points;
    for (std::uint64_t i = 0; i < table.image.size(); ++i) {
        if (table.image[i] == i && !table.tie[i]) {
            auto perm = permutation_at(cfg.n_items, i);
            auto b = win_probs(perm, cfg);
            points.push_back(StablePoint{std::move(perm), std::move(b), std::nullopt, 0});
        }
    }
    return points;
}

}  // namespace

StablePointSet enumerate_stable_points(const MarketConfig& cfg, const SearchStrategy& strategy, int exhaustive_cap) {
    validate_config(cfg);
    const int n = cfg.n_items;
    StablePointSet set;
    switch (strategy.kind) {
    case SearchStrategy::Kind::Exhaustive: {
        if (n > exhaustive_cap) {
            throw Error("cap_exceeded", "exhaustive enumeration limited to N <= " + std::to_string(exhaustive_cap) +
                                            " (got N=" + std::to_string(n) + ")");
        }
        set.strategy = "exhaustive";
        set.exact = true;
        const auto table = kernels::b_image_table_parallel(cfg, factorial(n));
        set.points = stable_from_table(table, cfg);
        set.permutations_scanned = table.image.size();
        set.pruned_level = n - 1;
        break;
    }
    case SearchStrategy::Kind::Pruned: {
        set.strategy = "pruned";
        auto scan_level = [&](int m) {
            const int top = std::min(m + 1, n);
            const auto table = kernels::b_image_table_parallel(cfg, factorial(top));
            set.permutations_scanned = table.image.size();
            set.pruned_level = top - 1;
            return stable_from_table(table, cfg);
        };
        if (strategy.pruned_level > 0) {
            set.points = scan_level(strategy.pruned_level);
        } else {
            // grow M from 2 until a whole level contributes no new stable point
            int m = 2;
            set.points = scan_level(m);
            while (m + 1 < n) {
                auto next = scan_level(m + 1);
                const bool grew = next.size() > set.points.size();
                set.points = std::move(next);
                ++m;
                if (!grew) break;
            }
        }
        set.exact = set.pruned_level >= n - 1;
        break;
    }
    case SearchStrategy::Kind::Randomized:
        return randomized_search(cfg, strategy.trials, strategy.seed);
    }
    return set;
}

StablePointSet randomized_search(const MarketConfig& cfg, std::uint64_t trials, std::uint64_t seed) {
    validate_config(cfg);
    if (trials < 1) throw Error("domain_error", "randomized search needs at least one trial");
    const int n = cfg.n_items;
    const int max_iter = 10 * n * n;

    enum Outcome : std::uint8_t { Stable, TieFixed, NotConverged };
    std::vector<std::uint8_t> outcome(trials);
    std::vector<std::uint64_t> endpoint(trials);

    // Trials are independent; each owns a substream derived from the trial index.
    const auto total = static_cast<std::int64_t>(trials);
#pragma omp parallel
    {
        WinProbEvaluator eval(cfg);
        std::vector<double> w(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
        std::vector<int> next(static_cast<std::size_t>(n));
#pragma omp for schedule(dynamic, 16)
        for (std::int64_t t = 0; t < total; ++t) {
            Stream rng(seed, static_cast<std::uint64_t>(t));
            long double sum = 0;
            for (auto& x : w) {
                x = rng.exponential();
                sum += x;
            }
            for (auto& x : w) x = static_cast<double>(x / sum);
            std::vector<int> order = rank_with_tiebreak(w).order();
            std::uint8_t result = NotConverged;
            for (int it = 0; it < max_iter; ++it) {
                eval.evaluate(order, b);
                bool tie = false;
                b_image_order(b, next, tie);
                if (next == order) {
                    result = tie ? TieFixed : Stable;
                    break;
                }
                order.swap(next);
            }
            outcome[static_cast<std::size_t>(t)] = result;
            endpoint[static_cast<std::size_t>(t)] = permutation_index(Permutation(order));
        }
    }

    StablePointSet set;
    set.strategy = "randomized";
    set.trials = trials;
    std::unordered_map<std::uint64_t, std::uint64_t> hits;
    for (std::uint64_t t = 0; t < trials; ++t) {
        if (outcome[t] == Stable) {
            ++hits[endpoint[t]];
        } else if (outcome[t] == TieFixed) {
            ++set.tie_rejected;
        } else {
            ++set.non_converged;
        }
    }
    std::vector<std::uint64_t> keys;
    for (const auto& [k, v] : hits) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    for (auto k : keys) {
        auto perm = permutation_at(n, k);
        auto b = win_probs(perm, cfg);
        set.points.push_back(StablePoint{std::move(perm), std::move(b), std::nullopt, hits[k]});
    }
    return set;
}

namespace {

std::uint32_t find_root(std::vector<std::uint32_t>& parent, std::uint32_t x) {
    while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    return x;
}

void label_components(PermutationGraph& g) {
    const auto count = static_cast<std::uint32_t>(g.edges.size());
    std::vector<std::uint32_t> parent(count);
    std::iota(parent.begin(), parent.end(), 0u);
    for (std::uint32_t i = 0; i < count; ++i) {
        auto a = find_root(parent, i);
        auto b = find_root(parent, g.edges[i]);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    g.component.assign(count, 0);
    std::vector<std::uint32_t> label(count, UINT32_MAX);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto r = find_root(parent, i);
        if (label[r] == UINT32_MAX) {
            label[r] = static_cast<std::uint32_t>(g.component_size.size());
            g.component_size.push_back(0);
        }
        g.component[i] = label[r];
        ++g.component_size[label[r]];
    }
    for (std::uint32_t i = 0; i < count; ++i) {
        if (g.edges[i] == i) g.fixed_points.push_back(i);
    }
}

}  // namespace

PermutationGraph build_permutation_graph(const MarketConfig& cfg, int cap) {
    validate_config(cfg);
    if (cfg.n_items > cap) {
        throw Error("cap_exceeded", "full permutation graph limited to N <= " + std::to_string(cap));
    }
    auto table = kernels::b_image_table_parallel(cfg, factorial(cfg.n_items));
    PermutationGraph g;
    g.n_items = cfg.n_items;
    g.edges = std::move(table.image);
    g.tie = std::move(table.tie);
    label_components(g);
    return g;
}

PermutationGraph build_seeded_graph(const MarketConfig& cfg, const std::vector<Permutation>& seeds,
                                    std::size_t max_nodes) {
    validate_config(cfg);
    PermutationGraph g;
    g.n_items = cfg.n_items;
    g.scope = "seeded";
    std::unordered_map<std::uint64_t, std::uint32_t> local;
    std::vector<std::uint64_t> global;
    auto intern = [&](const Permutation& p) {
        const auto key = permutation_index(p);
        auto [it, inserted] = local.try_emplace(key, static_cast<std::uint32_t>(global.size()));
        if (inserted) {
            if (global.size() >= max_nodes) throw Error("cap_exceeded", "seeded graph exceeds node cap");
            global.push_back(key);
            g.seeded_nodes.push_back(p);
            g.edges.push_back(UINT32_MAX);
            g.tie.push_back(0);
        }
        return it->second;
    };
    for (const auto& s : seeds) intern(s);
    for (std::size_t i = 0; i < g.seeded_nodes.size(); ++i) {
        const auto r = apply_B(g.seeded_nodes[i], cfg);
        const auto target = intern(r.output_perm);
        g.edges[i] = target;
        g.tie[i] = r.has_tie;
    }
    label_components(g);
    return g;
}

double attractiveness(const PermutationGraph& g, const Permutation& f) {
    if (g.scope != "full") throw Error("domain_error", "attractiveness needs the full permutation graph");
    const auto idx = permutation_index(f);
    if (idx >= g.edges.size() || !g.is_fixed(idx)) throw Error("not_fixed", "permutation is not a fixed point of B");
    return static_cast<double>(g.component_size[g.component[idx]]) / static_cast<double>(g.edges.size());
}

std::vector<StablePoint> fixed_points_with_attractiveness(const PermutationGraph& g, const MarketConfig& cfg) {
    std::vector<StablePoint> out;
    for (auto idx : g.fixed_points) {
        auto perm = permutation_at(g.n_items, idx);
        auto b = win_probs(perm, cfg);
        const double a = attractiveness(g, perm);
        out.push_back(StablePoint{std::move(perm), std::move(b), a, 0});
    }
    return out;
}

std::string edge_list_text(const PermutationGraph& g) {
    std::string out;
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        const auto from = g.scope == "full" ? permutation_at(g.n_items, i) : g.seeded_nodes[i];
        const auto to = g.scope == "full" ? permutation_at(g.n_items, g.edges[i]) : g.seeded_nodes[g.edges[i]];
        out += from.to_string();
        out += ' ';
        out += to.to_string();
        out += '\n';
    }
    return out;
}

std::optional<int> steps_to_fixed_point(const Permutation& start, const MarketConfig& cfg, int max_steps) {
    auto cur = start;
    for (int step = 0; step <= max_steps; ++step) {
        auto r = apply_B(cur, cfg);
        if (r.output_perm == cur) return step;
        cur = r.output_perm;
    }
    return std::nullopt;
}

}  // namespace popdyn
