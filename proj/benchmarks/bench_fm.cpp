#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "vitalspec/fm.hpp"

using namespace vitalspec;

static TimeSeries message(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = std::sin(0.05 * static_cast<double>(i));
  return TimeSeries(std::move(v), 60.0);
}

static void BM_FmModulate(benchmark::State& state) {
  FmConfig cfg;
  cfg.duration = static_cast<double>(state.range(0)) / cfg.fs;
  const auto m = message(200);
  for (auto _ : state) benchmark::DoNotOptimize(fm_modulate(m, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FmModulate)->RangeMultiplier(4)->Range(1 << 13, 1 << 17);

static void BM_Normalize(benchmark::State& state) {
  const auto m = message(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(normalize(m, {}));
}
BENCHMARK(BM_Normalize)->Arg(120)->Arg(1440);

BENCHMARK_MAIN();
