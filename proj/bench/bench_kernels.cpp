#include <benchmark/benchmark.h>

#include <vector>

#include "transtext/flow.hpp"
#include "transtext/kernels.hpp"
#include "transtext/rng.hpp"

namespace {

namespace k = transtext::kernels;

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  transtext::Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

template <bool Parallel>
void BM_gemm_nn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_vec(n * n, 1), b = random_vec(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::gemm_nn(n, n, n, a, b, c);
    else k::serial::gemm_nn(n, n, n, a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

template <bool Parallel>
void BM_gemm_nt(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_vec(n * n, 1), b = random_vec(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::gemm_nt(n, n, n, a, b, c);
    else k::serial::gemm_nt(n, n, n, a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

template <bool Parallel>
void BM_separable(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto src = random_vec(n * n, 3);
  const std::vector<double> kernel(15, 1.0 / 15.0);
  std::vector<double> dst(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::separable_filter(src, n, n, kernel, dst);
    else k::serial::separable_filter(src, n, n, kernel, dst);
    benchmark::DoNotOptimize(dst.data());
  }
}

template <bool Parallel>
void BM_window_projection(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto src = random_vec(n * n, 4);
  const auto proj = random_vec(6 * 25, 5);
  std::vector<double> out(6 * n * n);
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::window_projection(src, n, n, 2, proj, 6, out);
    else k::serial::window_projection(src, n, n, 2, proj, 6, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_farneback(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  transtext::GrayImage a(n, n), b(n, n);
  a.data = random_vec(n * n, 6);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) b.at(y, x) = a.at(y, x >= 2 ? x - 2 : 0);
  for (auto _ : state) benchmark::DoNotOptimize(transtext::farneback_flow(a, b, {}));
}

}  // namespace

BENCHMARK(BM_gemm_nn<false>)->Name("gemm_nn/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_gemm_nn<true>)->Name("gemm_nn/parallel")->Arg(64)->Arg(256);
BENCHMARK(BM_gemm_nt<false>)->Name("gemm_nt/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_gemm_nt<true>)->Name("gemm_nt/parallel")->Arg(64)->Arg(256);
BENCHMARK(BM_separable<false>)->Name("separable/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_separable<true>)->Name("separable/parallel")->Arg(64)->Arg(256);
BENCHMARK(BM_window_projection<false>)->Name("window_projection/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_window_projection<true>)->Name("window_projection/parallel")->Arg(64)->Arg(256);
BENCHMARK(BM_farneback)->Name("farneback")->Arg(32)->Arg(64);

BENCHMARK_MAIN();
