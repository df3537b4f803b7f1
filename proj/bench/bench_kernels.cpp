// Serial reference vs OpenMP for the hot kernels.
//   ./bench_kernels --benchmark_counters_tabular=true

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "pfode/kernels.hpp"

using namespace pfode;

namespace {

std::vector<double> line_grid(std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = -10.0 + 20.0 * static_cast<double>(i) / (n - 1);
  return x;
}

template <Exec E>
void BM_RbfGram(benchmark::State& state) {
  const auto x = line_grid(static_cast<std::size_t>(state.range(0)));
  Eigen::MatrixXd k;
  for (auto _ : state) {
    kernels::rbf_gram(x, 1.0, 1.0, k, E);
    benchmark::DoNotOptimize(k.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

template <Exec E>
void BM_HeatStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<double> u(n * n), v(n * n);
  for (double& z : u) z = g(rng);
  for (auto _ : state) {
    kernels::heat_step(u, v, n, 0.2, 0.2, BoundaryCondition::dirichlet, E);
    std::swap(u, v);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * n));
}

template <Exec E>
void BM_SqExpGram(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(state.range(0), 10);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  Eigen::MatrixXd k;
  for (auto _ : state) {
    kernels::sq_exp_gram(x, 1.5, k, E);
    benchmark::DoNotOptimize(k.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

}  // namespace

BENCHMARK(BM_RbfGram<Exec::serial>)->Arg(100)->Arg(1000)->Arg(4000)->UseRealTime();
BENCHMARK(BM_RbfGram<Exec::parallel>)->Arg(100)->Arg(1000)->Arg(4000)->UseRealTime();
BENCHMARK(BM_HeatStep<Exec::serial>)->Arg(64)->Arg(256)->Arg(1024)->UseRealTime();
BENCHMARK(BM_HeatStep<Exec::parallel>)->Arg(64)->Arg(256)->Arg(1024)->UseRealTime();
BENCHMARK(BM_SqExpGram<Exec::serial>)->Arg(400)->Arg(2000)->UseRealTime();
BENCHMARK(BM_SqExpGram<Exec::parallel>)->Arg(400)->Arg(2000)->UseRealTime();

BENCHMARK_MAIN();
