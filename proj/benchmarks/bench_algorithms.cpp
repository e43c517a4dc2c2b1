// Wall-clock cost of the four Tucker estimators, the SVD kernel and k-means
// on cubic tensors with a rank-5 signal plus unit Gaussian noise.
#include <benchmark/benchmark.h>

#include "tucker/cocluster.hpp"
#include "tucker/experiments.hpp"
#include "tucker/hooi.hpp"
#include "tucker/seeding.hpp"

using namespace tucker;

namespace {

DenseTensor noisy_cube(Index p, Index r) {
  Rng rng(derive_seed({0xBE7C, static_cast<std::uint64_t>(p)}));
  const auto inst = gen_low_rank_instance({p, p, p}, r, 3.0 * std::sqrt(static_cast<double>(p * r)), rng);
  return inst.t + gaussian_noise({p, p, p}, 1.0, rng);
}

void BM_Hooi(benchmark::State& state) {
  const Index p = state.range(0);
  const DenseTensor t = noisy_cube(p, 5);
  const auto groups = SymmetricGroups::asymmetric(t.dims(), {5, 5, 5});
  for (auto _ : state) benchmark::DoNotOptimize(hooi(t, groups, init::StHosvd{}, {.t_max = 10, .stop_tol = 0.0}));
}

void BM_OneStepHooi(benchmark::State& state) {
  const DenseTensor t = noisy_cube(state.range(0), 5);
  const auto groups = SymmetricGroups::asymmetric(t.dims(), {5, 5, 5});
  for (auto _ : state) benchmark::DoNotOptimize(one_step_hooi(t, groups, init::StHosvd{}));
}

void BM_StHosvd(benchmark::State& state) {
  const DenseTensor t = noisy_cube(state.range(0), 5);
  const auto groups = SymmetricGroups::asymmetric(t.dims(), {5, 5, 5});
  for (auto _ : state) benchmark::DoNotOptimize(st_hosvd(t, groups));
}

void BM_THosvd(benchmark::State& state) {
  const DenseTensor t = noisy_cube(state.range(0), 5);
  const auto groups = SymmetricGroups::asymmetric(t.dims(), {5, 5, 5});
  for (auto _ : state) benchmark::DoNotOptimize(t_hosvd(t, groups));
}

void BM_SvdR(benchmark::State& state) {
  const Index p = state.range(0);
  Rng rng(7);
  const Matrix m = gaussian_matrix(p, p * p, rng);
  for (auto _ : state) benchmark::DoNotOptimize(svd_r(m, 5));
}

void BM_KMeans(benchmark::State& state) {
  const Index p = state.range(0);
  Rng rng(9);
  const Matrix u = gaussian_matrix(p, 5, rng);
  for (auto _ : state) benchmark::DoNotOptimize(kmeans_rows(u, 5));
}

}  // namespace

BENCHMARK(BM_Hooi)->Arg(40)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OneStepHooi)->Arg(40)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StHosvd)->Arg(40)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_THosvd)->Arg(40)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SvdR)->Arg(40)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KMeans)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
