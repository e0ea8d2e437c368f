#include <benchmark/benchmark.h>

#include <random>

#include "sras/spd.hpp"

namespace {

sras::SymMatrix random_pd(sras::Index k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  sras::Matrix g(k, k);
  for (sras::Index i = 0; i < k; ++i) {
    for (sras::Index j = 0; j < k; ++j) g(i, j) = n(rng);
  }
  return sras::SymMatrix(g * g.transpose() + sras::Matrix::Identity(k, k));
}

void BM_Eigendecompose(benchmark::State& state) {
  const sras::SymMatrix a = random_pd(state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(sras::sym_eigendecompose(a));
}
BENCHMARK(BM_Eigendecompose)->Arg(3)->Arg(8)->Arg(32)->Arg(64);

void BM_Airm(benchmark::State& state) {
  const sras::SpdMatrix a(random_pd(state.range(0), 2));
  const sras::SpdMatrix b(random_pd(state.range(0), 3));
  for (auto _ : state) benchmark::DoNotOptimize(sras::airm_distance(a, b));
}
BENCHMARK(BM_Airm)->Arg(3)->Arg(8)->Arg(32);

}  // namespace
