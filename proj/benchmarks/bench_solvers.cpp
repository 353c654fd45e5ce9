#include <benchmark/benchmark.h>

#include "tcdl/dual.hpp"
#include "tcdl/harness.hpp"
#include "tcdl/primal.hpp"

namespace {

tcdl::MarketModel instance(int depth, int branching) {
    return tcdl::random_instance({.seed = 7, .depth = depth, .branching = branching, .lambda = 0.1, .rho = 0.3}).model;
}

// Benchmark arguments are (depth, branching).
void tree_shapes(benchmark::internal::Benchmark* b) {
    b->Args({1, 2})->Args({2, 2})->Args({3, 2})->Args({2, 3})->Args({3, 3})->Unit(benchmark::kMillisecond);
}

void BM_SuperreplicationPrice(benchmark::State& state) {
    const tcdl::MarketModel m = instance(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    tcdl::PayoffVector g;
    for (std::size_t l = 0; l < m.tree.leaf_count(); ++l) g.values.push_back(l % 3 == 0 ? 1.0 : -0.5);
    for (auto _ : state) benchmark::DoNotOptimize(tcdl::superreplication_price(m, g));
}
BENCHMARK(BM_SuperreplicationPrice)->Apply(tree_shapes);

void BM_X0(benchmark::State& state) {
    const tcdl::MarketModel m = instance(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(tcdl::compute_x0(m));
}
BENCHMARK(BM_X0)->Apply(tree_shapes);

void BM_DualSolve(benchmark::State& state) {
    const tcdl::DualProblem problem(instance(static_cast<int>(state.range(0)), static_cast<int>(state.range(1))),
                                    tcdl::Utility::log());
    for (auto _ : state) benchmark::DoNotOptimize(problem.solve(1.0).value);
}
BENCHMARK(BM_DualSolve)->Apply(tree_shapes);

void BM_PrimalSolve(benchmark::State& state) {
    const tcdl::MarketModel m = instance(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    const double x = tcdl::compute_x0(m) + 1.0;
    for (auto _ : state) benchmark::DoNotOptimize(tcdl::solve_primal(m, tcdl::Utility::log(), x).value);
}
BENCHMARK(BM_PrimalSolve)->Apply(tree_shapes);

void BM_FindYhat(benchmark::State& state) {
    const tcdl::MarketModel m = instance(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    const tcdl::DualProblem problem(m, tcdl::Utility::power(0.5));
    const double x0 = tcdl::compute_x0(m);
    for (auto _ : state) benchmark::DoNotOptimize(tcdl::find_yhat(problem, x0 + 1.0, x0).yhat);
}
BENCHMARK(BM_FindYhat)->Apply(tree_shapes);

}  // namespace

BENCHMARK_MAIN();
