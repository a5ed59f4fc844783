// Serial vs OpenMP kernels. Run with --benchmark_counters_tabular=true.

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "popdyn/kernels.hpp"

using namespace popdyn;

namespace {

std::vector<double> zipf_weights(int n, double alpha) {
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = std::pow(n - i, -alpha);
    return w;
}

template <auto Kernel>
void disposition(benchmark::State& state) {
    const auto w = zipf_weights(static_cast<int>(state.range(0)), 1.0);
    const int k = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(w, k));
}

template <auto Kernel>
void image_table(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto cfg = MarketConfig::basic(n, 3, 1.0, RepetitionMode::WithoutRepetition);
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(cfg, factorial(n)));
}

template <auto Kernel>
void run_batch(benchmark::State& state) {
    const auto cfg = MarketConfig::basic(10, 2, 0.5, RepetitionMode::WithoutRepetition);
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(cfg, static_cast<std::uint64_t>(state.range(0)), 16, 1, {}));
}

}  // namespace

BENCHMARK(disposition<kernels::disposition_sum_serial>)->Name("disposition/serial")->Args({20, 4})->Args({30, 5})->Unit(benchmark::kMillisecond);
BENCHMARK(disposition<kernels::disposition_sum_parallel>)->Name("disposition/parallel")->Args({20, 4})->Args({30, 5})->Unit(benchmark::kMillisecond);
BENCHMARK(image_table<kernels::b_image_table_serial>)->Name("image_table/serial")->Arg(7)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(image_table<kernels::b_image_table_parallel>)->Name("image_table/parallel")->Arg(7)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(run_batch<kernels::run_batch_serial>)->Name("run_batch/serial")->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(run_batch<kernels::run_batch_parallel>)->Name("run_batch/parallel")->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
