#include <benchmark/benchmark.h>

#include "ldgas/duality.hpp"
#include "ldgas/equilibrium.hpp"
#include "ldgas/montecarlo.hpp"

namespace {

using namespace ldgas;

const ConfinementPotential kBox = ConfinementPotential::make(Polynomial{}, Walls::box(-1, 1));
const ConfinementPotential kGauss = ConfinementPotential::make(Polynomial{0, 0, 0.25});
const LinearStatistic kLinear{Polynomial{0, 1}};
const LinearStatistic kQuartic{Polynomial::monomial(4)};

void BM_SolveSoftSoft(benchmark::State& state) {
  const auto w = tilt(kGauss, kQuartic, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(solve_one_cut(w));
}
BENCHMARK(BM_SolveSoftSoft);

void BM_SolveHardSoft(benchmark::State& state) {
  const auto w = tilt(kBox, kLinear, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(solve_one_cut(w));
}
BENCHMARK(BM_SolveHardSoft);

void BM_BuildBoxCurve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(integrate_J(build_curve(kBox, kLinear, -3, 3, n)));
}
BENCHMARK(BM_BuildBoxCurve)->Arg(201)->Arg(801)->Arg(3201)->Unit(benchmark::kMillisecond);

void BM_QuarticCumulants(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(cumulants(kGauss, kQuartic, 5));
}
BENCHMARK(BM_QuarticCumulants)->Unit(benchmark::kMillisecond);

void BM_MetropolisSweep(benchmark::State& state) {
  ChainConfig c;
  c.gas = GasParameters(static_cast<int>(state.range(0)), 2.0);
  c.potential = kBox;
  c.statistic = kLinear;
  c.tilt_s = 0.5;
  auto st = initial_state(c);
  for (auto _ : state) metropolis_step(st, c);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MetropolisSweep)->Arg(8)->Arg(32)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
