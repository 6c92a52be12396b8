#include <benchmark/benchmark.h>

#include "pfc/experiments.hpp"
#include "pfc/kernels.hpp"
#include "pfc/spectral.hpp"
#include "pfc/steppers.hpp"

using namespace pfc;

static void BM_Laplacian(benchmark::State& state) {
  const int M = static_cast<int>(state.range(0));
  const Grid2D g(M, 64.0);
  const Field f = random_initial(0.1, 0.02, g, 1);
  for (auto _ : state) benchmark::DoNotOptimize(laplacian(f));
  state.SetItemsProcessed(state.iterations() * g.size());
}
BENCHMARK(BM_Laplacian)->Arg(64)->Arg(128)->Arg(256);

static void BM_Bdf2Step(benchmark::State& state) {
  const int M = static_cast<int>(state.range(0));
  const Grid2D g(M, 64.0);
  const PfcParams p(0.2, g);
  StepperState s(random_initial(0.1, 0.02, g, 1));
  s.push(bdf2_step(s, 1e-2, p).phi, 1e-2);
  int iters = 0;
  for (auto _ : state) {
    StepResult r = bdf2_step(s, 1e-2, p);
    iters += r.stats.iterations;
    benchmark::DoNotOptimize(r);
  }
  state.counters["iterations"] = benchmark::Counter(iters, benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_Bdf2Step)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_DocKernels(benchmark::State& state) {
  const TimeMesh m = random_mesh(static_cast<int>(state.range(0)), 1.0, 3);
  for (auto _ : state) benchmark::DoNotOptimize(doc_kernels(m));
}
BENCHMARK(BM_DocKernels)->Arg(100)->Arg(500)->Arg(2000);

static void BM_TridiagonalEigenvalue(benchmark::State& state) {
  const TimeMesh m = random_ratio_mesh(static_cast<int>(state.range(0)), 1.0, 0.01, 3.5, 4);
  const Tridiagonal t = btilde_tridiagonal(m);
  for (auto _ : state) benchmark::DoNotOptimize(tridiagonal_eigenvalue(t, 0));
}
BENCHMARK(BM_TridiagonalEigenvalue)->Arg(100)->Arg(500)->Arg(2000);

static void BM_EigenBounds(benchmark::State& state) {
  const TimeMesh m = random_ratio_mesh(static_cast<int>(state.range(0)), 1.0, 0.01, 3.5, 5);
  for (auto _ : state) benchmark::DoNotOptimize(eigen_bounds(m));
}
BENCHMARK(BM_EigenBounds)->Arg(100)->Arg(500);
BENCHMARK_MAIN();
