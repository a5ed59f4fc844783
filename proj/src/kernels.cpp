#include "popdyn/kernels.hpp"

#include <algorithm>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "popdyn/equilibrium.hpp"
#include "popdyn/winprob.hpp"

namespace popdyn::kernels {

namespace {

// Depth-first walk over ordered draws without replacement. `used` is a bit
// mask over quality indices; `top` is the best (highest index) item drawn so
// far, -1 before the first draw. At the last draw the winner is max(top, j),
// so all draws below `top` are folded into one term.
class DispositionWalker {
public:
    DispositionWalker(std::span<const double> w, int k, std::vector<double>& b) : w_(w), k_(k), b_(b) {}

    void descend(int depth, double prefix, std::uint64_t used, int top) {
        const int n = static_cast<int>(w_.size());
        long double rem = 0;
        for (int j = 0; j < n; ++j) {
            if (!(used >> j & 1u)) rem += w_[static_cast<std::size_t>(j)];
        }
        if (depth == k_ - 1) {
            long double below = 0;
            for (int j = 0; j < top; ++j) {
                if (!(used >> j & 1u)) below += w_[static_cast<std::size_t>(j)];
            }
            if (top >= 0) b_[static_cast<std::size_t>(top)] += static_cast<double>(prefix * below / rem);
            for (int j = top + 1; j < n; ++j) {
                if (!(used >> j & 1u)) b_[static_cast<std::size_t>(j)] += static_cast<double>(prefix * w_[static_cast<std::size_t>(j)] / rem);
            }
            return;
        }
        for (int j = 0; j < n; ++j) {
            if (used >> j & 1u) continue;
            const double p = static_cast<double>(w_[static_cast<std::size_t>(j)] / rem);
            descend(depth + 1, prefix * p, used | (std::uint64_t{1} << j), std::max(top, j));
        }
    }

private:
    std::span<const double> w_;
    int k_;
    std::vector<double>& b_;
};

void check_args(std::span<const double> w, int k) {
    if (w.size() > 63) throw Error("domain_error", "disposition kernel supports N <= 63");
    if (k < 1 || k > static_cast<int>(w.size())) throw Error("domain_error", "K must lie in 1..N");
}

long double total_weight(std::span<const double> w) {
    long double t = 0;
    for (double x : w) t += x;
    return t;
}

}  // namespace

std::vector<double> disposition_sum_serial(std::span<const double> weights, int k) {
    check_args(weights, k);
    std::vector<double> b(weights.size(), 0.0);
    DispositionWalker(weights, k, b).descend(0, 1.0, 0, -1);
    return b;
}

std::vector<double> disposition_sum_parallel(std::span<const double> weights, int k) {
    check_args(weights, k);
    const int n = static_cast<int>(weights.size());
    if (k == 1) return disposition_sum_serial(weights, k);
    const long double total = total_weight(weights);
    std::vector<std::vector<double>> partial(static_cast<std::size_t>(n), std::vector<double>(weights.size(), 0.0));
#pragma omp parallel for schedule(dynamic, 1)
    for (int first = 0; first < n; ++first) {
        const double p = static_cast<double>(weights[static_cast<std::size_t>(first)] / total);
        DispositionWalker(weights, k, partial[static_cast<std::size_t>(first)])
            .descend(1, p, std::uint64_t{1} << first, first);
    }
    std::vector<double> b(weights.size(), 0.0);
    for (const auto& part : partial) {
        for (std::size_t i = 0; i < b.size(); ++i) b[i] += part[i];
    }
    return b;
}

std::vector<double> disposition_sum(std::span<const double> weights, int k) {
#ifdef _OPENMP
    if (!omp_in_parallel() && omp_get_max_threads() > 1 && k > 2) return disposition_sum_parallel(weights, k);
#endif
    return disposition_sum_serial(weights, k);
}

namespace {

void scan_block(const MarketConfig& cfg, std::uint64_t begin, std::uint64_t end, ImageTable& table) {
    if (begin >= end) return;
    const int n = cfg.n_items;
    WinProbEvaluator eval(cfg);
    std::vector<int> order = permutation_at(n, begin).order();
    std::vector<int> next(static_cast<std::size_t>(n));
    std::vector<double> b(static_cast<std::size_t>(n));
    for (std::uint64_t i = begin; i < end; ++i) {
        eval.evaluate(order, b);
        bool tie = false;
        b_image_order(b, next, tie);
        table.image[i] = static_cast<std::uint32_t>(permutation_index(Permutation(next)));
        table.tie[i] = tie ? 1 : 0;
        std::next_permutation(order.begin(), order.end());
    }
}

ImageTable make_table(const MarketConfig& cfg, std::uint64_t count) {
    validate_config(cfg);
    if (count > factorial(std::min(cfg.n_items, 20)) || count > UINT32_MAX) {
        throw Error("cap_exceeded", "image table request exceeds the permutation space or 2^32 entries");
    }
    ImageTable t;
    t.n_items = cfg.n_items;
    t.image.resize(count);
    t.tie.resize(count);
    return t;
}

}  // namespace

ImageTable b_image_table_serial(const MarketConfig& cfg, std::uint64_t count) {
    auto table = make_table(cfg, count);
    scan_block(cfg, 0, count, table);
    return table;
}

ImageTable b_image_table_parallel(const MarketConfig& cfg, std::uint64_t count) {
    auto table = make_table(cfg, count);
    constexpr std::uint64_t kBlock = 4096;
    const auto blocks = static_cast<std::int64_t>((count + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t blk = 0; blk < blocks; ++blk) {
        const auto begin = static_cast<std::uint64_t>(blk) * kBlock;
        scan_block(cfg, begin, std::min(count, begin + kBlock), table);
    }
    return table;
}

std::vector<RunOutcome> run_batch_serial(const MarketConfig& cfg, std::uint64_t rounds, std::uint64_t runs,
                                         std::uint64_t seed, const std::vector<Permutation>& stable) {
    std::vector<RunOutcome> out;
    out.reserve(runs);
    for (std::uint64_t r = 0; r < runs; ++r) out.push_back(run_outcome(cfg, rounds, seed, r, stable));
    return out;
}

std::vector<RunOutcome> run_batch_parallel(const MarketConfig& cfg, std::uint64_t rounds, std::uint64_t runs,
                                           std::uint64_t seed, const std::vector<Permutation>& stable) {
    std::vector<RunOutcome> out(runs);
    const auto count = static_cast<std::int64_t>(runs);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t r = 0; r < count; ++r) {
        out[static_cast<std::size_t>(r)] = run_outcome(cfg, rounds, seed, static_cast<std::uint64_t>(r), stable);
    }
    return out;
}

}  // namespace popdyn::kernels
