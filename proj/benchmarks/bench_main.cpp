#include <benchmark/benchmark.h>

#include "mcaoi/fbl_channel.hpp"
#include "mcaoi/optimizer.hpp"
#include "mcaoi/queue_sim.hpp"

namespace {

void BM_AvgBlepClosedForm(benchmark::State& state) {
  const auto cfg = mcaoi::FblConfig::smart_grid_default();
  const auto budget = mcaoi::LinkBudget(35.0, 23.0, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mcaoi::avg_blep_mrc(budget, cfg));
}
BENCHMARK(BM_AvgBlepClosedForm)->Arg(1)->Arg(4)->Arg(16);

void BM_AvgBlepQuadrature(benchmark::State& state) {
  const auto cfg = mcaoi::FblConfig::smart_grid_default();
  const auto budget = mcaoi::LinkBudget(35.0, 23.0, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mcaoi::avg_blep_quadrature(budget, cfg));
}
BENCHMARK(BM_AvgBlepQuadrature)->Arg(1)->Arg(4)->Arg(16);

void BM_Simulate(benchmark::State& state) {
  mcaoi::SimConfig cfg;
  cfg.link = mcaoi::LinkBudget(35.0, 23.0, 4);
  cfg.n_packets = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(mcaoi::simulate(cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Simulate)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_OptimizeExhaustive(benchmark::State& state) {
  mcaoi::OptimizerParams p;
  p.transmit_power_dbm = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mcaoi::optimize_exhaustive(p));
}
BENCHMARK(BM_OptimizeExhaustive)->Arg(28)->Arg(35)->Arg(40);

void BM_OptimizeDinkelbach(benchmark::State& state) {
  mcaoi::OptimizerParams p;
  p.transmit_power_dbm = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mcaoi::optimize_dinkelbach(p));
}
BENCHMARK(BM_OptimizeDinkelbach)->Arg(28)->Arg(35)->Arg(40);

}  // namespace

BENCHMARK_MAIN();
