#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "qtorus/core_types.hpp"
#include "qtorus/parallel.hpp"
#include "qtorus/spectrum.hpp"

namespace qtorus {

enum class CorrKind { windowed, generalized, smoothed };
std::string_view to_string(CorrKind kind);

struct CorrEstimate {
    CorrKind kind = CorrKind::windowed;
    int k = 0;
    std::string alpha_digest;
    double value = 0.0;
    double x_or_lambda = 0.0;
    std::optional<Window> window;
    std::optional<TestPsi> psi1;
    std::optional<TestPsi> psi2;
    std::optional<WeightH> h;
    std::int64_t pair_count = 0;
    double theoretical_limit = 0.0;
    double error_budget = 0.0;
    // Irrational data only: adjacent values closer than 1e-9 (never merged).
    std::size_t near_ties = 0;
};

std::string corr_csv_header();
std::string corr_csv_row(const CorrEstimate& est);

// ---- windowed ---------------------------------------------------------------

// Ordered pairs i != j with both points in [lo, hi] and p_i - p_j in [a, b];
// `points` sorted ascending. Two-pointer sweep, partitioned in fixed chunks.
std::int64_t count_window_pairs(std::span<const double> points, double lo, double hi, Window w,
                                Parallelism par = {});
// O(N^2) double loop.
std::int64_t count_window_pairs_naive(std::span<const double> points, double lo, double hi, Window w);
std::size_t count_near_ties(std::span<const double> points, double lo, double hi, double tol = 1e-9);

CorrEstimate r2_windowed(const SpectrumSlice& slice, double X, Window w, Parallelism par = {});
// Injected sorted points with an explicit normalizing density D.
CorrEstimate r2_windowed_points(std::span<const double> points, double X, Window w, double density,
                                Parallelism par = {});
double limit_windowed(int k, Window w);

// ---- smoothed -----------------------------------------------------------------

struct SmoothedOptions {
    double hat_tol = 1e-14;   // inner sum truncated where the h-hat envelope drops below this
    double tail_tol = 1e-12;  // allowed normalized psi mass beyond the cutoff
    Parallelism par{};
};

CorrEstimate r2_smoothed_direct(const SpectrumSlice& slice, const TestPsi& psi1, const TestPsi& psi2,
                                const WeightH& h, double lambda, const SmoothedOptions& opts = {});
// Plain double loop over all (i, j), h-hat evaluated per pair.
double r2_smoothed_naive(const SpectrumSlice& slice, const TestPsi& psi1, const TestPsi& psi2,
                         const WeightH& h, double lambda);

double limit_smoothed(const TestPsi& psi1, const TestPsi& psi2, const WeightH& h, int k);

// (k/2) int_{x}^inf env(r) r^{k/2-1} dr: normalized envelope mass beyond r = x.
double psi_tail_mass(const TestPsi& psi, double x, int k);
// Smallest cutoff Lambda (to 1%) with psi_tail_mass(Lambda / lambda) < tol for both psi.
double required_cutoff(const TestPsi& psi1, const TestPsi& psi2, double lambda, int k, double tol = 1e-12);

// ---- generalized --------------------------------------------------------------

double rho_factor(double r1, double r2, int k);

// psi(r1, r2, s) continuous, supported in [0, r_max]^2 x [-s_max, s_max].
struct GeneralizedKernel {
    std::function<double(double, double, double)> psi;
    double r_max = 0.0;
    double s_max = 0.0;
};

CorrEstimate r2_generalized(const SpectrumSlice& slice, const GeneralizedKernel& kernel, double lambda);
// Two-term limit by nested adaptive quadrature.
double limit_generalized(const GeneralizedKernel& kernel, int k, double tol = 1e-10);

namespace serial {
std::int64_t count_window_pairs(std::span<const double> points, double lo, double hi, Window w);
CorrEstimate r2_smoothed_direct(const SpectrumSlice& slice, const TestPsi& psi1, const TestPsi& psi2,
                                const WeightH& h, double lambda, const SmoothedOptions& opts = {});
}  // namespace serial

}  // namespace qtorus
