#include <benchmark/benchmark.h>

#include "ddlab/gaussian.hpp"

using namespace ddlab::gaussian;

// Regime 3 (t > -s1) carries the double integral.
static void BM_RtRegime3(benchmark::State& state) {
  const CovKernel k = BrownianMinPlusTau{1.0};
  const LinearDdeParams p{0.5, -1.0, 1.0};
  const double t = static_cast<double>(state.range(0)) / 2.0;
  for (auto _ : state) benchmark::DoNotOptimize(r_t(k, p, t, -0.7, -0.2));
}
BENCHMARK(BM_RtRegime3)->Arg(3)->Arg(6)->Arg(12);

static void BM_RtCosine(benchmark::State& state) {
  const CovKernel k = Cosine{};
  const LinearDdeParams p{0.0, -1.0, 1.5707963267948966};
  for (auto _ : state) benchmark::DoNotOptimize(r_t(k, p, 4.0, -1.2, -0.3));
}
BENCHMARK(BM_RtCosine);

static void BM_Sigma2Curve(benchmark::State& state) {
  const CovKernel k = BrownianMinPlusTau{1.0};
  for (auto _ : state) benchmark::DoNotOptimize(sigma2_curve(k, {0.5, -1.0, 1.0}, 2.0, 0.01));
}
BENCHMARK(BM_Sigma2Curve)->Unit(benchmark::kMillisecond);

static void BM_Hayes(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(hayes_stable({-0.7, -1.3, 1.0}));
}
BENCHMARK(BM_Hayes);
