#include <benchmark/benchmark.h>

#include <vector>

#include "ddlab/dde.hpp"
#include "ddlab/ensemble.hpp"

using namespace ddlab;

static void BM_IntegrateHat(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const auto h = dde::History::constant(1.0, m, {0.7, 0});
  for (auto _ : state) benchmark::DoNotOptimize(dde::integrate(dde::HatDde{10, 13}, h, 20.0));
  state.SetItemsProcessed(state.iterations() * 20 * m);
}
BENCHMARK(BM_IntegrateHat)->Arg(128)->Arg(512);

static void BM_ObserveKeenerNoisy(benchmark::State& state) {
  const dde::KeenerDde field{10, 0.5, 0.567, dde::PiecewiseConstantUniform{0.0, 0.2, 1.0}};
  const auto h = dde::History::constant(1.0, 128, {0.7, 0});
  const std::vector<std::size_t> idx{128 * 20};
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(dde::integrate_observe(field, h, idx, ++seed));
  state.SetItemsProcessed(state.iterations() * 20 * 128);
}
BENCHMARK(BM_ObserveKeenerNoisy);

static void BM_EnsembleSnapshots(benchmark::State& state) {
  const std::size_t n = 1000;
  const auto src = ensemble::make_source(ensemble::IidUniformPath{0.65, 0.75}, n, 64, 1.0, 1);
  const std::vector<double> times{10.0, 10.5, 11.0};
  for (auto _ : state)
    benchmark::DoNotOptimize(ensemble::evolve_ensemble(src, n, dde::HatDde{10, 13}, times, 1));
}
BENCHMARK(BM_EnsembleSnapshots)->Unit(benchmark::kMillisecond);
