#include <benchmark/benchmark.h>

#include "sras/gridfisher.hpp"
#include "sras/synthetic.hpp"

namespace {

void BM_ExperimentOperator(benchmark::State& state) {
  const sras::ConditionGrid grid = sras::ConditionGrid::static_gratings();
  const sras::Index cells = state.range(0);
  const sras::TunedPopulation pop = sras::TunedPopulation::random(cells, grid, sras::PopulationSpec{}, 1);
  const sras::SpdMatrix noise = sras::differential_noise(pop, grid, 0, 0.5, 2.0);
  const sras::ExperimentRecord rec = sras::sample_record(pop, grid, noise, 20, 2);
  for (auto _ : state) benchmark::DoNotOptimize(sras::experiment_operators(rec, grid, sras::GridMode::Fisher));
}
BENCHMARK(BM_ExperimentOperator)->Arg(20)->Arg(60);

}  // namespace
