#include <kdvist/potential.hpp>
#include <kdvist/scattering.hpp>
#include <kdvist/solver.hpp>

#include <benchmark/benchmark.h>

using namespace kdvist;

static void BM_Reflection(benchmark::State& st) {
    const Potential q = Potential::box(-0.5L, 0, 2);
    const std::vector<Real> ks{0.5L, 1, 2, 4};
    for (auto _ : st) benchmark::DoNotOptimize(half_line_scattering(q, 0, ks));
}
BENCHMARK(BM_Reflection)->Unit(benchmark::kMillisecond);

static void BM_SolitonPoint(benchmark::State& st) {
    SolveOptions o;
    o.symbol.path = KernelPath::discrete;
    const Solver s(Potential::soliton(1, 0), o);
    Real x = -1;
    for (auto _ : st) {
        benchmark::DoNotOptimize(s.point(x, 0.5L));
        x += 1e-3L;
    }
}
BENCHMARK(BM_SolitonPoint)->Unit(benchmark::kMicrosecond);

// Kernel construction is cached inside the solver; this times the operator
// assembly and determinant for a step once the cache is warm.
static void BM_StepPoint(benchmark::State& st) {
    const Solver s(Potential::pure_step(1));
    s.point(0, 1);
    Real x = -1;
    for (auto _ : st) {
        benchmark::DoNotOptimize(s.point(x, 1));
        x += 1e-3L;
    }
}
BENCHMARK(BM_StepPoint)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
