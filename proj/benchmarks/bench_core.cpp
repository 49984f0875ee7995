#include <benchmark/benchmark.h>

#include "nudgekit/fft.hpp"
#include "nudgekit/observation.hpp"
#include "nudgekit/random_fields.hpp"
#include "nudgekit/rng.hpp"
#include "nudgekit/solver.hpp"

using namespace nudgekit;

namespace {

GridSpec grid_of(int n) {
  GridSpec g;
  g.n = n;
  return g;
}

SpectralVorticityField sample(int n) {
  CounterRng rng(11);
  return random_vorticity(grid_of(n), 4.0, 3.0, rng);
}

void BM_FftRoundTrip(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto fft = Fft::get(n);
  RealBuffer x(static_cast<std::size_t>(n) * n);
  ComplexBuffer c(static_cast<std::size_t>(n) * (n / 2 + 1));
  CounterRng rng(3);
  for (auto& v : x) v = rng.normal();
  for (auto _ : state) {
    fft->forward(x.data(), c.data());
    fft->inverse_destructive(c.data(), x.data());
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_FftRoundTrip)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_NonlinearTerm(benchmark::State& state) {
  const auto w = sample(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(nonlinear_term(w));
}
BENCHMARK(BM_NonlinearTerm)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_EtdStep(benchmark::State& state) {
  SolverParams p;
  p.grid = grid_of(static_cast<int>(state.range(0)));
  EtdIntegrator integrator(p);
  auto w = sample(p.grid.n);
  std::int64_t k = 0;
  for (auto _ : state) integrator.step(w, k++);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_EtdStep)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_ApplyJ(benchmark::State& state) {
  const auto grid = grid_of(static_cast<int>(state.range(0)));
  const Interpolant J(standard_interpolant(grid));
  const auto w = sample(grid.n);
  for (auto _ : state) benchmark::DoNotOptimize(J.apply_to_vorticity(w));
}
BENCHMARK(BM_ApplyJ)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_ApplyJPhysical(benchmark::State& state) {
  const auto grid = grid_of(static_cast<int>(state.range(0)));
  const Interpolant J(standard_interpolant(grid));
  EtdIntegrator integrator(SolverParams{grid});
  SpectralVorticityField rhs = SpectralVorticityField::zeros(grid);
  integrator.rhs(sample(grid.n), rhs);
  const auto& u = integrator.velocity();
  for (auto _ : state) benchmark::DoNotOptimize(J.apply(u));
}
BENCHMARK(BM_ApplyJPhysical)->Arg(128)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
