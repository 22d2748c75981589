// SPDX-License-Identifier: MIT
//
// Compares the OpenMP Monte Carlo reliability kernel against the serial
// reference it is tested against.  Both produce identical counts; the
// benchmark shows what the parallel path buys at various trial budgets.
#include <benchmark/benchmark.h>

#include <ftsim/montecarlo.hpp>

using ftsim::analytics::mc_recovery;
using ftsim::analytics::mc_recovery_serial;

static void BM_McSerial(benchmark::State& state) {
  const auto trials = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    auto r = mc_recovery_serial(800, 12, 80000.0, trials, 42);
    benchmark::DoNotOptimize(r.recovered);
  }
  state.SetItemsProcessed(state.iterations() * trials);
}
BENCHMARK(BM_McSerial)->Arg(10000)->Arg(100000)->Arg(1000000);

static void BM_McParallel(benchmark::State& state) {
  const auto trials = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    auto r = mc_recovery(800, 12, 80000.0, trials, 42);
    benchmark::DoNotOptimize(r.recovered);
  }
  state.SetItemsProcessed(state.iterations() * trials);
}
BENCHMARK(BM_McParallel)->Arg(10000)->Arg(100000)->Arg(1000000);

BENCHMARK_MAIN();
