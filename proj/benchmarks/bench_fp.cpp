#include <benchmark/benchmark.h>

#include "ddlab/map_density.hpp"

using namespace ddlab::map;

static void BM_FpStepperHat(benchmark::State& state) {
  const auto cells = static_cast<std::size_t>(state.range(0));
  const FpStepper step(Hat{1.8}, cells);
  auto f = GridDensity::uniform(0, 1, cells);
  for (auto _ : state) {
    f = step(f);
    benchmark::DoNotOptimize(f);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cells));
}
BENCHMARK(BM_FpStepperHat)->Arg(1024)->Arg(4096)->Arg(16384);

static void BM_FpHatAssembleAndApply(benchmark::State& state) {
  const auto f = GridDensity::uniform(0, 1, 4096);
  for (auto _ : state) benchmark::DoNotOptimize(fp_hat(f, 1.8));
}
BENCHMARK(BM_FpHatAssembleAndApply);

static void BM_NoisyKeener(benchmark::State& state) {
  const FpStepper step(NoisyKeener{0.5, 0.567, GridDensity::uniform(0.0, 0.2, 64)}, 4096);
  auto f = GridDensity::uniform(0, 1, 4096);
  for (auto _ : state) {
    f = step(f);
    benchmark::DoNotOptimize(f);
  }
}
BENCHMARK(BM_NoisyKeener);

static void BM_PeriodDetection(benchmark::State& state) {
  const auto f0 = GridDensity::uniform(0, 1, 4096);
  for (auto _ : state) benchmark::DoNotOptimize(detect_asymptotic_period(Hat{1.15}, f0));
}
BENCHMARK(BM_PeriodDetection)->Unit(benchmark::kMillisecond);
