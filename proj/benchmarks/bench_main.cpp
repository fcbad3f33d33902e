#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "peakon/conslaw.hpp"
#include "peakon/pde.hpp"
#include "peakon/twave.hpp"

using namespace peakon;

namespace {

pde::InitialData gaussian() {
  pde::InitialData d;
  d.params = {{"offset", 2.0}};
  return d;
}

void BM_Helmholtz(benchmark::State& state) {
  const auto N = static_cast<std::size_t>(state.range(0));
  pde::SpectralOps ops(pde::Grid(40.0, N));
  const std::vector<double> m = pde::initial_momentum(ops, gaussian());
  std::vector<double> u, ux;
  for (auto _ : state) {
    ops.helmholtz(m, u, ux);
    benchmark::DoNotOptimize(u.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Helmholtz)->RangeMultiplier(2)->Range(256, 4096)->Complexity(benchmark::oNLogN);

void rhs_bench(benchmark::State& state, const char* f, const char* g) {
  const auto N = static_cast<std::size_t>(state.range(0));
  pde::SpectralOps ops(pde::Grid(40.0, N));
  const pde::NodalEquation eq(EquationSpec::parse(f, g));
  const pde::GridState s = pde::make_state(ops, pde::initial_momentum(ops, gaussian()));
  std::vector<double> out;
  for (auto _ : state) {
    pde::rhs(ops, eq, s.m, s.u, s.ux, out);
    benchmark::DoNotOptimize(out.data());
  }
}
void BM_RhsCH(benchmark::State& state) { rhs_bench(state, "ux", "u"); }
void BM_RhsSingular(benchmark::State& state) { rhs_bench(state, "ux/u^3", "1/u^2"); }
BENCHMARK(BM_RhsCH)->Arg(512)->Arg(2048);
BENCHMARK(BM_RhsSingular)->Arg(512)->Arg(2048);

void BM_StepRK4(benchmark::State& state) {
  const auto N = static_cast<std::size_t>(state.range(0));
  pde::SpectralOps ops(pde::Grid(40.0, N));
  const pde::NodalEquation eq(EquationSpec::parse("ux", "u"));
  pde::GridState s = pde::make_state(ops, pde::initial_momentum(ops, gaussian()));
  for (auto _ : state) {
    s = pde::step_rk4(ops, eq, s, 1e-3);
    benchmark::DoNotOptimize(s.m.data());
  }
}
BENCHMARK(BM_StepRK4)->Arg(512)->Arg(2048);

void BM_Classify(benchmark::State& state) {
  const EquationSpec eq = EquationSpec::parse("ux*(u^2-ux^2)", "u*(u^2-ux^2)");
  const SamplingPolicy policy{};
  for (auto _ : state) benchmark::DoNotOptimize(classify(eq, policy));
}
BENCHMARK(BM_Classify)->Unit(benchmark::kMillisecond);

void BM_SolitaryProfile(benchmark::State& state) {
  const auto xi = twave::uniform_grid(-15.0, 15.0, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(twave::solitary_profile(0.5, 1.0, xi));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SolitaryProfile)->Arg(3001)->Arg(30001);

}  // namespace
BENCHMARK_MAIN();
