#include <benchmark/benchmark.h>

#include "sparfima/estimation.hpp"
#include "sparfima/model.hpp"

using namespace sparfima;

namespace {

Parameters truth() {
  Parameters p;
  p.rho = 0.9;
  p.d = 1.0;
  return p;
}

void BM_Eigendecomposition(benchmark::State& state) {
  const auto g = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    // A fresh matrix each time so the shared spectrum cache is cold.
    const WeightMatrix w = row_standardize(queen_contiguity(g, g));
    benchmark::DoNotOptimize(w.spectrum().eigenvalues.data());
  }
}

void BM_ConcentratedLikelihood(benchmark::State& state) {
  const auto g = static_cast<std::size_t>(state.range(0));
  const ModelSpec spec = ModelSpec::grid(g, g, truth());
  const Likelihood lik(simulate(spec, 1).values, spec.w1, spec.w2);
  double d = 0.8;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lik.concentrated(0.85, 0.0, d).value);
    d = d > 1.4 ? 0.8 : d + 0.01;
  }
}

void BM_FitNoMa(benchmark::State& state) {
  const auto g = static_cast<std::size_t>(state.range(0));
  const ModelSpec spec = ModelSpec::grid(g, g, truth());
  const Likelihood lik(simulate(spec, 2).values, spec.w1, spec.w2);
  FitConfig config;
  config.variant = Variant::sparfima_noma;
  config.compute_std_errors = false;
  for (auto _ : state) benchmark::DoNotOptimize(fit_qml(lik, config).loglik);
}

}  // namespace

BENCHMARK(BM_Eigendecomposition)->Arg(15)->Arg(20)->Arg(25)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConcentratedLikelihood)->Arg(15)->Arg(20)->Arg(25)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_FitNoMa)->Arg(15)->Arg(20)->Arg(25)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
