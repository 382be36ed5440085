// Serial reference kernels against the OpenMP versions at the shapes the
// experiments use: H x D weights against a D x D covariance, and the N x D
// sample Gram matrix.

#include <benchmark/benchmark.h>

#include <random>

#include "lindyn/kernels.hpp"
#include "lindyn/matrix.hpp"

namespace {

lindyn::Matrix random_matrix(std::size_t r, std::size_t c, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  lindyn::Matrix m(r, c);
  for (double& v : m.values()) v = u(rng);
  return m;
}

template <lindyn::Matrix (*F)(const lindyn::Matrix&, const lindyn::Matrix&)>
void bm_matmul(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(64, d, 1), b = random_matrix(d, d, 2);
  for (auto _ : state) benchmark::DoNotOptimize(F(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(64 * d * d));
}

template <lindyn::Matrix (*F)(const lindyn::Matrix&)>
void bm_gram(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto x = random_matrix(1000, d, 3);
  for (auto _ : state) benchmark::DoNotOptimize(F(x));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(1000 * d * d));
}

template <lindyn::Matrix (*F)(const lindyn::Matrix&, const lindyn::Matrix&)>
void bm_matmul_tn(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(d, 64, 4), b = random_matrix(d, d, 5);
  for (auto _ : state) benchmark::DoNotOptimize(F(a, b));
}

}  // namespace

BENCHMARK(bm_matmul<lindyn::kernels::serial::matmul>)->Name("matmul/serial")->Arg(128)->Arg(784);
BENCHMARK(bm_matmul<lindyn::kernels::matmul>)->Name("matmul/omp")->Arg(128)->Arg(784);
BENCHMARK(bm_matmul_tn<lindyn::kernels::serial::matmul_tn>)->Name("matmul_tn/serial")->Arg(128)->Arg(784);
BENCHMARK(bm_matmul_tn<lindyn::kernels::matmul_tn>)->Name("matmul_tn/omp")->Arg(128)->Arg(784);
BENCHMARK(bm_gram<lindyn::kernels::serial::gram>)->Name("gram/serial")->Arg(128)->Arg(784);
BENCHMARK(bm_gram<lindyn::kernels::gram>)->Name("gram/omp")->Arg(128)->Arg(784);

BENCHMARK_MAIN();
