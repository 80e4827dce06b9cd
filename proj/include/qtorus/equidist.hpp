#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qtorus/core_types.hpp"
#include "qtorus/diophantine.hpp"
#include "qtorus/parallel.hpp"
#include "qtorus/theta.hpp"

namespace qtorus {

enum class ProbeTarget { constant, theta_pair, dominating };
std::string_view to_string(ProbeTarget t);
ProbeTarget parse_probe_target(std::string_view name);

struct HorocycleProbe {
    double v = 0.01;
    double sigma = 0.0;
    WeightH h{1.0, HShape::triangle};
    ProbeTarget target = ProbeTarget::constant;
    // dominating target only
    double R = 2.0;
    double beta = -1.0;  // < 0 means k/2

    HorocycleProbe() = default;
    HorocycleProbe(double v_, double sigma_, WeightH h_, ProbeTarget t);
};

struct HorocycleResult {
    double value = 0.0;
    double error_estimate = 0.0;
    double limit = 0.0;  // two-term value for theta pairs, mu-based for the others
};

struct EquidistOptions {
    ThetaIntegralOptions theta{};
    double abs_tol = 1e-12;
};

// v^sigma int F(u + iv, 0; (0, alpha)) h(v^sigma u) du
HorocycleResult horocycle_average(const HorocycleProbe& probe, const TorusSpec& spec, const TestPsi& psi1,
                                  const TestPsi& psi2, const EquidistOptions& opts = {});

// B_k * limit_smoothed: the two-term limit for theta pairs at sigma = k/2 - 1.
double theta_pair_limit(const TestPsi& psi1, const TestPsi& psi2, const WeightH& h, int k);

// ---- dominating function F_R -------------------------------------------------------

struct DominatingFn {
    double R = 2.0;
    double beta = 1.0;
    TestPsi f;  // f(w) = psi(|w|^2)
    int k = 2;
    double tol = 1e-14;

    DominatingFn(double R_, TestPsi f_, int k_, double beta_ = -1.0);
};

// Coprime (c, d) with v / |c tau + d|^2 >= R; (c, d) and (-c, -d) both listed.
struct Coset {
    std::int64_t c = 0, d = 1;
};
std::vector<Coset> reaching_cosets(double u, double v, double R);

// Full sum over the cosets reaching height R.
double dominating_fn_eval(const DominatingFn& dom, cplx tau, const std::vector<double>& xi);
// Two-term form, valid for tau in the SL(2,Z) fundamental domain.
double dominating_fn_eval_fundamental(const DominatingFn& dom, cplx tau, const std::vector<double>& xi);
// Number of cosets up to sign with v_gamma >= R.
int cusp_indicator(cplx tau, double R);

// 2 pi R^{-(k/2+1-beta)} / (k/2+1-beta) * int f
double l1_mean_dominating(const DominatingFn& dom);

struct MonteCarloResult {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};

// Samples the fundamental domain with v ~ R / (1 - U) and phi in [0, pi).
MonteCarloResult l1_mean_monte_carlo(const DominatingFn& dom, std::size_t samples, std::uint64_t seed,
                                     Parallelism par = {});

// ---- block sums --------------------------------------------------------------------

// sum_{d=1}^{D} sum_m psi(T^2 |d alpha + m|^2)
double block_sum(const PreciseVector& alpha, std::int64_t D, double T, const TestPsi& psi, Parallelism par = {},
                 double tol = 1e-14);

namespace serial {
double block_sum(const PreciseVector& alpha, std::int64_t D, double T, const TestPsi& psi, double tol = 1e-14);
}

// ---- cusp diagnostics -------------------------------------------------------------

// v^{k/2-1} int_{|u| > v^{1-eps}} F_R(u + iv; (0, alpha)) h(v^{k/2-1} u) du
double cusp_contribution(const DominatingFn& dom, const std::vector<double>& alpha, const WeightH& h, double v,
                         double eps = 0.5, double abs_tol = 1e-12);

// Diagnostic exponents: eps = 0.5, eps' = min(0.9/(kappa-1), 0.9 (k-2) + 0.05).
struct CuspExponents {
    double eps = 0.5;
    double eps_prime = 0.0;
    double bound_exponent = 0.0;  // decay rate in R of the larger bound term
};
CuspExponents cusp_exponents(double kappa, int k);

struct SandwichReport {
    std::size_t points = 0;
    std::size_t cusp_points = 0;  // points with X_R = 1
    double max_violation = 0.0;   // max (|Theta_f conj Theta_g| X_R - F_hat_R)
    double L = 0.0;
    bool holds = false;
};

// |Theta_f conj Theta_g| X_R <= L + F_R(tau; 2 xi) at `points` random
// fundamental-domain points.
SandwichReport sandwich_check(const TestPsi& f, const TestPsi& g, const DominatingFn& dom, double L,
                              std::size_t points, std::uint64_t seed);

// Random point in the fundamental domain, v drawn from [v_lo, v_hi] with density ~ v^-2.
GroupPoint sample_fundamental(std::mt19937_64& rng, int k, double v_lo, double v_hi);

std::string equidist_csv_header();
std::string equidist_csv_row(double v, double value, double limit, double R, const std::string& regime);

}  // namespace qtorus
