#include <benchmark/benchmark.h>

#include "geoq/diffusion.hpp"
#include "geoq/markov.hpp"
#include "geoq/model.hpp"

namespace {

using namespace geoq;

QueueParams scaled_params(int mult) {
  const double mu = 1.0 / 5.3;
  const double r = 482.0 * mult;
  return QueueParams::make(static_cast<int>(r) + 13, r * mu, mu);
}

void BM_KernelBuild(benchmark::State& state) {
  const auto params = scaled_params(static_cast<int>(state.range(0)));
  const auto arrivals = ArrivalModel::poisson(params.arrival_rate);
  const int k = default_truncation(params);
  for (auto _ : state) {
    auto kernel = build_kernel(params, arrivals, k);
    benchmark::DoNotOptimize(kernel);
  }
}
BENCHMARK(BM_KernelBuild)->Arg(1)->Arg(2)->Arg(4);

void BM_KernelApply(benchmark::State& state) {
  const auto params = scaled_params(static_cast<int>(state.range(0)));
  const auto arrivals = ArrivalModel::poisson(params.arrival_rate);
  const auto kernel = build_kernel(params, arrivals, default_truncation(params));
  std::vector<double> pi(kernel.size(), 1.0 / kernel.size()), out;
  for (auto _ : state) {
    kernel.apply(pi, out);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_KernelApply)->Arg(1)->Arg(2)->Arg(4);

void BM_SolveStationary(benchmark::State& state) {
  const double mu = 1.0 / 5.3;
  const auto params = QueueParams::make(66, 66 * 0.9 * mu, mu);
  const auto arrivals = ArrivalModel::poisson(params.arrival_rate);
  for (auto _ : state) {
    auto pmf = solve_auto(params, arrivals);
    benchmark::DoNotOptimize(pmf);
  }
}
BENCHMARK(BM_SolveStationary);

void BM_BuildDensity(benchmark::State& state) {
  const auto params = scaled_params(static_cast<int>(state.range(0)));
  const auto arrivals = ArrivalModel::poisson(params.arrival_rate);
  for (auto _ : state) {
    auto density = build_density(params, arrivals, DensityVariant::StateDependent);
    benchmark::DoNotOptimize(density);
  }
}
BENCHMARK(BM_BuildDensity)->Arg(1)->Arg(4);

}  // namespace

BENCHMARK_MAIN();
