// Serial reference vs OpenMP kernels.
#include <benchmark/benchmark.h>

#include "atosync/discrete_time.hpp"
#include "atosync/experiments.hpp"

namespace {

using atosync::Execution;

void conditional_pmfs(benchmark::State& state, Execution exec) {
  atosync::ContinuousParams p;
  p.lambda = 0.9;
  p.lead_time = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(atosync::conditional_production_pmfs(p, exec));
}

void discrete_pmfs(benchmark::State& state, Execution exec) {
  auto p = atosync::reference_case(2);
  p.lead_periods = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(atosync::conditional_production_pmfs_discrete(p, exec));
}

void grid(benchmark::State& state, Execution exec) {
  const auto g = state.range(0) == 0 ? atosync::continuous_reference_grid() : atosync::discrete_reference_grid();
  for (auto _ : state) benchmark::DoNotOptimize(atosync::run_grid(g, exec));
}

}  // namespace

BENCHMARK_CAPTURE(conditional_pmfs, serial, Execution::serial)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(conditional_pmfs, parallel, Execution::parallel)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(discrete_pmfs, serial, Execution::serial)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(discrete_pmfs, parallel, Execution::parallel)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(grid, serial, Execution::serial)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(1);
BENCHMARK_CAPTURE(grid, parallel, Execution::parallel)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(1);

BENCHMARK_MAIN();
