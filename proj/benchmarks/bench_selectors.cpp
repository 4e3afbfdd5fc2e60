#include <benchmark/benchmark.h>

#include <cstddef>

#include "ltprune/dataset.hpp"
#include "ltprune/parallel.hpp"
#include "ltprune/selectors.hpp"
#include "ltprune/signals.hpp"

namespace {

using namespace ltprune;

EmbeddingDataset bench_dataset(std::size_t head) {
  LongTailSpec spec;
  spec.num_classes = 20;
  spec.head_count = head;
  spec.imbalance_ratio = 100.0;
  spec.dims = 32;
  spec.seed = 1;
  return generate_long_tail(spec);
}

void BM_RbfKernel(benchmark::State& state) {
  const auto ds = bench_dataset(static_cast<std::size_t>(state.range(0)));
  const double sigma = median_heuristic_bandwidth(ds);
  for (auto _ : state) benchmark::DoNotOptimize(rbf_kernel(ds, sigma));
  state.counters["n"] = static_cast<double>(ds.size());
}
BENCHMARK(BM_RbfKernel)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_MedianHeuristic(benchmark::State& state) {
  const auto ds = bench_dataset(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(median_heuristic_bandwidth(ds));
  state.counters["n"] = static_cast<double>(ds.size());
}
BENCHMARK(BM_MedianHeuristic)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

template <bool Lazy>
void BM_FacilityLocation(benchmark::State& state) {
  const auto ds = bench_dataset(static_cast<std::size_t>(state.range(0)));
  const auto kernel = rbf_kernel(ds);
  const std::size_t budget = ds.size() / 10;
  for (auto _ : state) {
    if constexpr (Lazy) {
      benchmark::DoNotOptimize(facility_location_greedy(kernel, budget));
    } else {
      benchmark::DoNotOptimize(facility_location_greedy_naive(kernel, budget));
    }
  }
  state.counters["n"] = static_cast<double>(ds.size());
}
BENCHMARK_TEMPLATE(BM_FacilityLocation, true)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_FacilityLocation, false)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_KCenter(benchmark::State& state) {
  const auto ds = bench_dataset(static_cast<std::size_t>(state.range(0)));
  const auto pool = ds.all_indices();
  for (auto _ : state) benchmark::DoNotOptimize(kcenter_greedy(ds, pool, ds.size() / 10, {}));
  state.counters["n"] = static_cast<double>(ds.size());
}
BENCHMARK(BM_KCenter)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
