#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "vitalspec/cnn.hpp"

using namespace vitalspec;

static std::vector<double> image() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> img(kImageSize * kImageSize);
  for (auto& x : img) x = u(rng);
  return img;
}

static void BM_Forward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto model = ShallowCnn::initialized({c, c, c}, 1);
  const auto img = image();
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(img, kImageSize, kImageSize));
}
BENCHMARK(BM_Forward)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_Backward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto model = ShallowCnn::initialized({c, c, c}, 1);
  const auto img = image();
  std::vector<double> grad(model.parameter_count());
  for (auto _ : state) benchmark::DoNotOptimize(model.loss_and_gradient(img, kImageSize, kImageSize, 1, grad));
}
BENCHMARK(BM_Backward)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
