#include <benchmark/benchmark.h>

#include "specprop/density/likelihood.h"
#include "specprop/linalg/oracles.h"
#include "specprop/spectral/estimators.h"

using namespace specprop;
using linalg::Matrix;
using linalg::Rng;

namespace {

Matrix spd(std::size_t n, double kappa) {
  Rng rng(11, n);
  return linalg::random_spd(rng, n, kappa, 1.0).matrix;
}

void BM_CholeskyLogdet(benchmark::State& state) {
  const Matrix a = spd(static_cast<std::size_t>(state.range(0)), 100.0);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::cholesky_logdet(a));
}
BENCHMARK(BM_CholeskyLogdet)->Arg(16)->Arg(64)->Arg(256);

void BM_SymEig(benchmark::State& state) {
  const Matrix a = spd(static_cast<std::size_t>(state.range(0)), 100.0);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::sym_eig(a));
}
BENCHMARK(BM_SymEig)->Arg(16)->Arg(64);

void BM_PowerMethod(benchmark::State& state) {
  const Matrix a = spd(64, 1000.0);
  const Rng rng(1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(spectral::power_method(a, static_cast<int>(state.range(0)), rng));
}
BENCHMARK(BM_PowerMethod)->Arg(5)->Arg(20);

void BM_ChebyshevLogdet(benchmark::State& state) {
  const Matrix a = spd(static_cast<std::size_t>(state.range(0)), 1000.0);
  spectral::EstimatorConfig cfg;
  cfg.lower_bound = 1e-3;
  const Rng rng(2, 0);
  for (auto _ : state) benchmark::DoNotOptimize(spectral::stochastic_logdet_chebyshev(a, cfg, rng));
}
BENCHMARK(BM_ChebyshevLogdet)->Arg(16)->Arg(64)->Arg(256);

void BM_TaylorLogdet(benchmark::State& state) {
  const Matrix a = spd(static_cast<std::size_t>(state.range(0)), 10.0);
  spectral::EstimatorConfig cfg;
  cfg.order = 30;
  const Rng rng(3, 0);
  for (auto _ : state) benchmark::DoNotOptimize(spectral::stochastic_logdet_taylor(a, cfg, rng));
}
BENCHMARK(BM_TaylorLogdet)->Arg(16)->Arg(64);

// 4-block hidden-32 flow on a batch of range(0) points; range(1) picks the metric operator
void BM_SpectralGrad(benchmark::State& state) {
  Rng rng(4, 0);
  density::ResidualFlow f({2, 32, 4, 0.01}, density::Direction::kLatentToData);
  f.initialize(rng, 0.1);
  const density::Prior prior = density::Prior::spherical_normal(2);
  const Matrix pts = prior.sample(rng, static_cast<std::size_t>(state.range(0)));
  const density::LikelihoodOptions opt{state.range(1) ? density::MetricMode::kAssembled
                                                      : density::MetricMode::kMatrixFree,
                                       density::LogDetMethod::kChebyshev};
  const spectral::EstimatorConfig cfg;
  const Rng seed(5, 0);
  for (auto _ : state) benchmark::DoNotOptimize(density::spectral_grad(f, pts, prior, cfg, seed, opt));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SpectralGrad)->ArgNames({"batch", "assembled"})->Args({8, 1})->Args({64, 1})->Args({8, 0})
    ->Unit(benchmark::kMillisecond);

void BM_ExactGrad(benchmark::State& state) {
  Rng rng(4, 0);
  density::ResidualFlow f({2, 32, 4, 0.01}, density::Direction::kLatentToData);
  f.initialize(rng, 0.1);
  const density::Prior prior = density::Prior::spherical_normal(2);
  const Matrix pts = prior.sample(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(density::exact_grad(f, pts, prior));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ExactGrad)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
