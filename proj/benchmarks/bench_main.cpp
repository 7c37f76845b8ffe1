#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "tthjb/hjb_operators.hpp"
#include "tthjb/integrator.hpp"
#include "tthjb/oracles.hpp"
#include "tthjb/potential.hpp"
#include "tthjb/sampler.hpp"

using namespace tthjb;

namespace {

PolySpace cube(std::size_t d, int deg) {
    return PolySpace(std::vector<std::pair<double, double>>(d, {-5.0, 5.0}), std::vector<int>(d, deg));
}

TensorTrain random_tt(std::size_t d, std::size_t n, std::size_t r, std::uint64_t seed) {
    return random_tensor_train(std::vector<std::size_t>(d, n), std::vector<std::size_t>(d - 1, r), seed);
}

void BM_Round(benchmark::State& state) {
    const auto d = std::size_t(state.range(0));
    const auto r = std::size_t(state.range(1));
    const TensorTrain a = random_tt(d, 5, r, 1);
    // rank 2r with a rank-r truncation target
    const TensorTrain doubled = tt_add_scaled(a, random_tt(d, 5, r, 2), 1e-3);
    for (auto _ : state) benchmark::DoNotOptimize(tt_round(doubled, RoundSpec::ranks(std::vector<std::size_t>(d - 1, r))));
}
BENCHMARK(BM_Round)->Args({6, 4})->Args({10, 4})->Args({20, 4})->Args({10, 8});

void BM_HjbRhs(benchmark::State& state) {
    const auto d = std::size_t(state.range(0));
    const auto r = std::size_t(state.range(1));
    const PolySpace space = cube(d, 4);
    const TensorTrain y = random_tt(d, 5, r, 3);
    for (auto _ : state) benchmark::DoNotOptimize(hjb_rhs(y, space));
}
BENCHMARK(BM_HjbRhs)->Args({6, 2})->Args({10, 2})->Args({10, 4})->Args({20, 2});

void BM_PowerIteration(benchmark::State& state) {
    const auto d = std::size_t(state.range(0));
    const PolySpace space = cube(d, 2);
    const SolutionSnapshot y{0.0, quadratic_tt_cores(random_spd_matrix(d, 1), space)};
    const SolverConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(power_iteration_bound(y, space, cfg));
}
BENCHMARK(BM_PowerIteration)->Arg(6)->Arg(10)->Arg(20);

void BM_EulerStep(benchmark::State& state) {
    const auto d = std::size_t(state.range(0));
    const PolySpace space = cube(d, 2);
    const SolutionSnapshot y{0.0, quadratic_tt_cores(random_spd_matrix(d, 1), space)};
    const SolverConfig cfg;
    const auto target = rank_budget(y.coeffs.interior_ranks(), y.coeffs.interior_ranks());
    for (auto _ : state) benchmark::DoNotOptimize(euler_step(y, 0.01, target, space, cfg));
}
BENCHMARK(BM_EulerStep)->Arg(6)->Arg(10)->Arg(20);

void BM_Gradient(benchmark::State& state) {
    const auto d = std::size_t(state.range(0));
    const auto r = std::size_t(state.range(1));
    const PolySpace space = cube(d, 6);
    const GradientEvaluator ev(random_tt(d, 7, r, 4), space);
    std::mt19937_64 gen(5);
    std::normal_distribution<double> n;
    std::vector<double> x(d), g(d);
    for (auto& v : x) v = n(gen);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ev.gradient(x, g));
        benchmark::ClobberMemory();
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Gradient)->Args({6, 2})->Args({20, 2})->Args({20, 4});

} // namespace

BENCHMARK_MAIN();
