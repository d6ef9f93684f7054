#include "ancient/cm.hpp"
#include "ancient/fd_solver.hpp"
#include "ancient/quadrature.hpp"

#include <benchmark/benchmark.h>

using namespace ancient;

namespace {

const StripDomain strip({1.0}, 4.0);

void BM_GramClosed(benchmark::State& state) {
    const auto span = build_continuum_family(strip, 6.0, static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(gram(span, 2.0, GramMethod::ClosedForm));
}
BENCHMARK(BM_GramClosed)->Arg(4)->Arg(8)->Arg(16);

void BM_GramQuadrature(benchmark::State& state) {
    const auto span = build_continuum_family(strip, 6.0, 4);
    const int n = static_cast<int>(state.range(0));
    const SpaceTimeGrid grid(strip, 4.0, n, 2 * n, {n / 4, 0});
    for (auto _ : state) benchmark::DoNotOptimize(gram(span, 1.0, GramMethod::Quadrature, grid));
}
BENCHMARK(BM_GramQuadrature)->Arg(64)->Arg(128);

void BM_ComputeFLadder(benchmark::State& state) {
    const auto span = build_continuum_family(strip, 6.0, 6);
    const int M = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(compute_f_ladder(span, 0.25, M, GramMethod::ClosedForm));
}
BENCHMARK(BM_ComputeFLadder)->Arg(10)->Arg(40);

void BM_Evolve(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const SpaceTimeGrid grid(strip, 1.0, n, 2 * n, {n / 4, 0});
    const auto u0 = seeded_bump(grid, 7);
    for (auto _ : state)
        benchmark::DoNotOptimize(evolve(laplacian_operator(), u0, grid, TimeScheme::CrankNicolson));
}
BENCHMARK(BM_Evolve)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
