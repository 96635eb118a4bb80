// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "difflight/kernels.hpp"

namespace k = difflight::kernels;

namespace {

std::vector<double> filled(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

template <auto Fn>
void gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto a = filled(n * n, 1), b = filled(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    Fn(a, b, c, n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <auto Fn>
void conv(benchmark::State& state) {
  const auto ch = static_cast<std::size_t>(state.range(0));
  const k::ConvGeometry g{ch, 32, 32, ch, 3, 1, 1};
  auto in = filled(ch * 32 * 32, 3), w = filled(ch * ch * 9, 4);
  std::vector<double> out(ch * g.out_height() * g.out_width());
  for (auto _ : state) {
    Fn(in, w, out, g);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(out.size() * ch * 9));
}

}  // namespace

BENCHMARK(gemm<k::serial::gemm>)->Name("gemm/serial")->RangeMultiplier(2)->Range(64, 256);
BENCHMARK(gemm<k::omp::gemm>)->Name("gemm/omp")->RangeMultiplier(2)->Range(64, 256)->UseRealTime();
BENCHMARK(gemm<k::serial::gemm_nt>)->Name("gemm_nt/serial")->RangeMultiplier(2)->Range(64, 256);
BENCHMARK(gemm<k::omp::gemm_nt>)->Name("gemm_nt/omp")->RangeMultiplier(2)->Range(64, 256)->UseRealTime();
BENCHMARK(conv<k::serial::conv2d>)->Name("conv2d/serial")->Arg(8)->Arg(32);
BENCHMARK(conv<k::omp::conv2d>)->Name("conv2d/omp")->Arg(8)->Arg(32)->UseRealTime();

BENCHMARK_MAIN();
