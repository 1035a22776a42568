#include <benchmark/benchmark.h>

#include "polyflow/cli/setup.hpp"
#include "polyflow/dynamics.hpp"
#include "polyflow/state.hpp"
#include "polyflow/stepper.hpp"

using namespace polyflow;

namespace {

cli::RunConfig quadratic_config(int dim_x, int n, int dim_q, int n_q) {
  cli::RunConfig c;
  c.grid.dim_x = dim_x;
  c.grid.n = n;
  c.basis.dim_q = dim_q;
  c.basis.n_q = n_q;
  c.initial.family = "quadratic";
  c.initial.epsilon = 1e-3;
  return c;
}

// Smooth data with q-degree <= 2, so every diagnostic sees a positive density.
struct Fixture {
  cli::Problem problem;
  const TorusGrid& grid;
  const QBasis& basis;
  const ModelParams& params;
  FlowState state;

  Fixture(int dim_x, int n, int dim_q, int n_q)
      : problem(cli::build_problem(quadratic_config(dim_x, n, dim_q, n_q))),
        grid(problem.grid),
        basis(*problem.basis),
        params(problem.params),
        state(cli::initial_state(quadratic_config(dim_x, n, dim_q, n_q), problem)) {}
};

}  // namespace

static void BM_BuildBasis(benchmark::State& st) {
  const Potential pot = make_hookean(1.0, 1.0, static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(build_basis(pot, static_cast<int>(st.range(1))));
}
BENCHMARK(BM_BuildBasis)->Args({1, 10})->Args({2, 8})->Args({3, 6})->Unit(benchmark::kMillisecond);

static void BM_Rhs1D(benchmark::State& st) {
  Fixture f(1, static_cast<int>(st.range(0)), 1, 8);
  for (auto _ : st) benchmark::DoNotOptimize(rhs_perturbation(f.state, f.params, f.basis, f.grid));
  st.SetItemsProcessed(st.iterations() * f.grid.size());
}
BENCHMARK(BM_Rhs1D)->RangeMultiplier(2)->Range(32, 256)->Unit(benchmark::kMicrosecond);

static void BM_Rhs2D(benchmark::State& st) {
  Fixture f(2, static_cast<int>(st.range(0)), 2, 4);
  for (auto _ : st) benchmark::DoNotOptimize(rhs_perturbation(f.state, f.params, f.basis, f.grid));
  st.SetItemsProcessed(st.iterations() * f.grid.size());
}
BENCHMARK(BM_Rhs2D)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_ImexStep(benchmark::State& st) {
  Fixture f(1, 64, 1, 8);
  const int order = static_cast<int>(st.range(0));
  for (auto _ : st)
    benchmark::DoNotOptimize(step_imex(f.state, f.params, f.basis, f.grid, 0.01, order));
}
BENCHMARK(BM_ImexStep)->Arg(1)->Arg(2)->Unit(benchmark::kMicrosecond);

static void BM_PicardStep(benchmark::State& st) {
  Fixture f(1, 64, 1, 8);
  for (auto _ : st)
    benchmark::DoNotOptimize(step_picard(f.state, f.params, f.basis, f.grid, 0.01));
}
BENCHMARK(BM_PicardStep)->Unit(benchmark::kMillisecond);

static void BM_EnergyReport(benchmark::State& st) {
  Fixture f(1, 64, 1, 8);
  for (auto _ : st) benchmark::DoNotOptimize(make_report(f.state, f.params, f.basis, f.grid, 0.1, true));
}
BENCHMARK(BM_EnergyReport)->Unit(benchmark::kMicrosecond);

static void BM_Cancellation(benchmark::State& st) {
  Fixture f(1, 64, 1, 8);
  const int order = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(cancellation_residual(f.state, f.basis, f.grid, order));
}
BENCHMARK(BM_Cancellation)->DenseRange(0, 3)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
