#include <benchmark/benchmark.h>

#include "riccati/continuation.hpp"
#include "riccati/moments.hpp"
#include "riccati/qseries.hpp"
#include "riccati/solver.hpp"

using namespace riccati;

namespace {

const Grid& grid_700() {
    static const Grid g = truncated_grid(700, 6.0);
    return g;
}

void BM_GaussLaguerre(benchmark::State& state) {
    const int N = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(gauss_laguerre(N));
}
BENCHMARK(BM_GaussLaguerre)->Arg(100)->Arg(400)->Arg(700)->Unit(benchmark::kMillisecond);

void BM_TruncatedGrid(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(truncated_grid(700, 6.0));
}
BENCHMARK(BM_TruncatedGrid)->Unit(benchmark::kMillisecond);

void BM_OperatorSet(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(OperatorSet(grid_700(), 2.1, Mode::family_a_v_form));
}
BENCHMARK(BM_OperatorSet)->Unit(benchmark::kMillisecond);

// Only P and dP depend on alpha once the family is built.
void BM_OperatorFamilyAt(benchmark::State& state) {
    const OperatorFamily family(grid_700());
    double alpha = 2.0;
    for (auto _ : state) {
        alpha += 1e-6;
        benchmark::DoNotOptimize(family.at(alpha));
    }
}
BENCHMARK(BM_OperatorFamilyAt)->Unit(benchmark::kMillisecond);

void BM_NewtonPerturbation(benchmark::State& state) {
    const OperatorSet ops(grid_700(), 2.1, Mode::family_a_v_form);
    const auto guess = perturbation_guess(1, 0.1, grid_700().interior_nodes());
    const Vector initial = Eigen::Map<const Vector>(guess.data(), ops.size());
    for (auto _ : state) benchmark::DoNotOptimize(newton_solve(ops, initial));
}
BENCHMARK(BM_NewtonPerturbation)->Unit(benchmark::kMillisecond);

void BM_CharacteristicSolve(benchmark::State& state) {
    const OperatorSet ops(grid_700(), characteristic_alpha(static_cast<int>(state.range(0))), Mode::family_a_v_form);
    for (auto _ : state) benchmark::DoNotOptimize(characteristic_solve(ops));
}
BENCHMARK(BM_CharacteristicSolve)->Arg(1)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_BuildSeries(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_series(Dilation::characteristic(n), PrecisionConfig::for_characteristic_index(n)));
    }
}
BENCHMARK(BM_BuildSeries)->Arg(1)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_ScalingCoefficient(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(scaling_coefficient(n));
}
BENCHMARK(BM_ScalingCoefficient)->Arg(1)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_TraceBranch(benchmark::State& state) {
    const OperatorFamily family(grid_700());
    const auto guess = perturbation_guess(1, 0.01, grid_700().interior_nodes());
    const SolveResult seed =
        newton_solve(family.at(2.01), Eigen::Map<const Vector>(guess.data(), family.size()));
    for (auto _ : state) benchmark::DoNotOptimize(trace_branch(family, seed, {2.0, 3.0}));
}
BENCHMARK(BM_TraceBranch)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
