#include <benchmark/benchmark.h>

#include <random>

#include "sras/summaries.hpp"
#include "sras/synthetic.hpp"

namespace {

void BM_AccumulatePullback(benchmark::State& state) {
  const sras::Index n = state.range(0);
  const auto threads = static_cast<unsigned>(state.range(1));
  sras::MlpSpec spec;
  spec.widths = {64, 64, 64};
  const sras::RepMap net = sras::random_mlp(spec, 1);
  const sras::Dataset data = sras::gaussian_dataset(n, spec.input_dim, 2);
  const sras::PerturbationFamily fam = sras::make_random_family(spec.input_dim, 4, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sras::accumulate_pullback(net, data, fam, std::nullopt, sras::Execution{threads, 64}));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_AccumulatePullback)->Args({256, 1})->Args({1024, 1})->Args({1024, 4});

}  // namespace
