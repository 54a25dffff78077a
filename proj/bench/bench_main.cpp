// Serial references against the OpenMP paths. Set OMP_NUM_THREADS to compare.

#include "cndr/complexity.hpp"
#include "cndr/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace cndr;

namespace {

PointSet points(int n, int d) {
  std::mt19937_64 g(42);
  std::normal_distribution<double> normal;
  PointSet x(n, d);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) x(i, c) = normal(g);
  return x;
}

void BM_Gram(benchmark::State& state) {
  const PointSet x = points(static_cast<int>(state.range(0)), 16);
  const KernelSpec k = KernelSpec::gaussian(2.0);
  for (auto _ : state) benchmark::DoNotOptimize(gram(k, x));
}

void BM_GramSerial(benchmark::State& state) {
  const PointSet x = points(static_cast<int>(state.range(0)), 16);
  const KernelSpec k = KernelSpec::gaussian(2.0);
  for (auto _ : state) benchmark::DoNotOptimize(gram_serial(k, x));
}

struct McFixture {
  PointSet x = points(64, 4);
  SpectralBundle bundle;
  ConstraintParams params;

  McFixture() {
    std::vector<KernelSpec> ks{normalize_spec(KernelSpec::coordinate_linear({0, 1}), x),
                               normalize_spec(KernelSpec::coordinate_linear({2, 3}), x)};
    bundle = build_bundle(ks, x);
    params.r = 2;
    params.nu = 8.0;
    params.lambda_r = 0.5 * kyfan_r(bundle, Vector::Ones(2), 2);
  }
};

void BM_Rademacher(benchmark::State& state) {
  const McFixture f;
  for (auto _ : state) benchmark::DoNotOptimize(estimate_rademacher(f.bundle, f.params, state.range(0), 1));
}

void BM_RademacherSerial(benchmark::State& state) {
  const McFixture f;
  for (auto _ : state) benchmark::DoNotOptimize(estimate_rademacher_serial(f.bundle, f.params, state.range(0), 1));
}

}  // namespace

BENCHMARK(BM_Gram)->Arg(256)->Arg(1024);
BENCHMARK(BM_GramSerial)->Arg(256)->Arg(1024);
BENCHMARK(BM_Rademacher)->Arg(2000);
BENCHMARK(BM_RademacherSerial)->Arg(2000);

BENCHMARK_MAIN();
