// Serial references against the OpenMP kernels. Arg(0) is the serial path,
// Arg(w > 0) the parallel one with w workers.
#include <benchmark/benchmark.h>

#include <cmath>

#include "qtorus/degeneracy.hpp"
#include "qtorus/diophantine.hpp"
#include "qtorus/equidist.hpp"
#include "qtorus/paircorr.hpp"
#include "qtorus/spectrum.hpp"
#include "qtorus/theta.hpp"

using namespace qtorus;

namespace {

const TorusSpec& alg2() {
    static const TorusSpec s = to_spec(algebraic_vector(2, 2));
    return s;
}

const SpectrumSlice& slice_1e5() {
    static const SpectrumSlice s = enumerate_spectrum(alg2(), 2.0e5 / 3.14159 * 1.01);
    return s;
}

void BM_enumerate_spectrum(benchmark::State& st) {
    const int w = static_cast<int>(st.range(0));
    for (auto _ : st) {
        SpectrumOptions o;
        o.par.workers = w;
        const SpectrumSlice s = w == 0 ? serial::enumerate_spectrum(alg2(), 1e5) : enumerate_spectrum(alg2(), 1e5, o);
        benchmark::DoNotOptimize(s.lambdas.data());
    }
}

void BM_window_pairs(benchmark::State& st) {
    const int w = static_cast<int>(st.range(0));
    const auto& s = slice_1e5();
    const double X = 1e5 / 3.14159;
    for (auto _ : st) {
        const std::int64_t n = w == 0 ? serial::count_window_pairs(s.rescaled, X, 2.0 * X, Window(0.0, 1.0))
                                      : count_window_pairs(s.rescaled, X, 2.0 * X, Window(0.0, 1.0), Parallelism{w});
        benchmark::DoNotOptimize(n);
    }
}

void BM_smoothed_direct(benchmark::State& st) {
    const int w = static_cast<int>(st.range(0));
    const TestPsi g = TestPsi::gaussian(1.0);
    const WeightH h(1.0, HShape::triangle);
    const double lambda = 50.0;
    const SpectrumSlice s = enumerate_spectrum(alg2(), required_cutoff(g, g, lambda, 2));
    SmoothedOptions o;
    o.par.workers = w;
    for (auto _ : st) {
        const double v = w == 0 ? serial::r2_smoothed_direct(s, g, g, h, lambda).value
                                : r2_smoothed_direct(s, g, g, h, lambda, o).value;
        benchmark::DoNotOptimize(v);
    }
}

void BM_theta_integral(benchmark::State& st) {
    const int w = static_cast<int>(st.range(0));
    const TestPsi g = TestPsi::gaussian(1.0);
    const WeightH h(1.0, HShape::triangle);
    const double v = 1.0 / 20.0;
    const SpectrumSlice s = enumerate_spectrum(alg2(), theta_cutoff(g, g, v));
    ThetaIntegralOptions o;
    o.par.workers = w;
    o.richardson = false;
    for (auto _ : st) {
        const double r = w == 0 ? serial::horocycle_theta_integral(s, g, g, h, v, 0.0, o).value
                                : horocycle_theta_integral(s, g, g, h, v, 0.0, o).value;
        benchmark::DoNotOptimize(r);
    }
}

void BM_degenerate_groups(benchmark::State& st) {
    const int w = static_cast<int>(st.range(0));
    const TorusSpec spec = TorusSpec::from_rationals(std::vector<Rational>(3, Rational::make(0, 1)));
    for (auto _ : st) {
        const auto g = w == 0 ? serial::degenerate_groups(spec, 1e5) : degenerate_groups(spec, 1e5, Parallelism{w});
        benchmark::DoNotOptimize(g.data());
    }
}

void BM_estimate_type(benchmark::State& st) {
    const int w = static_cast<int>(st.range(0));
    const PreciseVector a = algebraic_vector(2, 2);
    for (auto _ : st) {
        const DiophReport r = w == 0 ? serial::estimate_type(a, 200000) : estimate_type(a, 200000, Parallelism{w});
        benchmark::DoNotOptimize(r.kappa_hat);
    }
}

void BM_block_sum(benchmark::State& st) {
    const int w = static_cast<int>(st.range(0));
    const PreciseVector a = algebraic_vector(2, 2);
    const TestPsi g = TestPsi::gaussian(1.0);
    for (auto _ : st) {
        const double r = w == 0 ? serial::block_sum(a, 1000000, 1000.0, g) : block_sum(a, 1000000, 1000.0, g, Parallelism{w});
        benchmark::DoNotOptimize(r);
    }
}

}  // namespace

#define QTORUS_BENCH(fn) BENCHMARK(fn)->Arg(0)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime()
QTORUS_BENCH(BM_enumerate_spectrum);
QTORUS_BENCH(BM_window_pairs);
QTORUS_BENCH(BM_smoothed_direct);
QTORUS_BENCH(BM_theta_integral);
QTORUS_BENCH(BM_degenerate_groups);
QTORUS_BENCH(BM_estimate_type);
QTORUS_BENCH(BM_block_sum);

BENCHMARK_MAIN();
