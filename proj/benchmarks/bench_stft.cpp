#include <benchmark/benchmark.h>

#include <vector>

#include "vitalspec/demod.hpp"
#include "vitalspec/fm.hpp"
#include "vitalspec/stft.hpp"

using namespace vitalspec;

static Waveform waveform() {
  const FmConfig cfg;
  std::vector<double> m(200);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = static_cast<double>(i % 40) / 20.0 - 1.0;
  return fm_modulate(TimeSeries(std::move(m), 60.0), cfg);
}

static void BM_Stft(benchmark::State& state) {
  const auto w = waveform();
  auto cfg = default_stft_config(FmConfig{});
  cfg.n_fft = static_cast<std::size_t>(state.range(0));
  cfg.hop = cfg.n_fft / 8;
  for (auto _ : state) benchmark::DoNotOptimize(stft(w, cfg));
}
BENCHMARK(BM_Stft)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

static void BM_RenderImage(benchmark::State& state) {
  const auto s = stft(waveform(), default_stft_config(FmConfig{}));
  for (auto _ : state) benchmark::DoNotOptimize(render_image(s));
}
BENCHMARK(BM_RenderImage);

static void BM_Ridge(benchmark::State& state) {
  const auto s = stft(waveform(), default_stft_config(FmConfig{}));
  for (auto _ : state) benchmark::DoNotOptimize(extract_ridge(s));
}
BENCHMARK(BM_Ridge);

BENCHMARK_MAIN();
