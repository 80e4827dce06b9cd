#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "qtorus/core_types.hpp"
#include "qtorus/parallel.hpp"
#include "qtorus/spectrum.hpp"

namespace qtorus {

using cplx = std::complex<double>;

// e(z) = exp(2 pi i z) for real z, with the argument reduced mod 1 first.
cplx expi2pi(double z);

// ---- group G^k ------------------------------------------------------------------

// (tau, phi; xi) with tau = u + iv, phi in [0, 2pi), xi = (x, y) in R^{2k}.
struct GroupPoint {
    double u = 0.0;
    double v = 1.0;
    double phi = 0.0;
    std::vector<double> xi;

    GroupPoint() = default;
    GroupPoint(double u_, double v_, double phi_, std::vector<double> xi_);
    int k() const { return static_cast<int>(xi.size() / 2); }
    double x(int j) const { return xi[j]; }
    double y(int j) const { return xi[k() + j]; }
    cplx tau() const { return {u, v}; }
};

struct Mat2 {
    double a = 1, b = 0, c = 0, d = 1;
};

Mat2 operator*(const Mat2& m, const Mat2& n);

struct GroupElement {
    Mat2 m;
    std::vector<double> xi;
};

GroupElement to_matrix_form(const GroupPoint& g);
GroupPoint from_matrix_form(const GroupElement& e);
GroupElement multiply(const GroupElement& a, const GroupElement& b);
GroupElement inverse(const GroupElement& e);

GroupPoint group_identity(int k);
GroupPoint group_mul(const GroupPoint& g, const GroupPoint& h);
// Left action gamma * g.
GroupPoint act(const GroupElement& gamma, const GroupPoint& g);

// Generators: S = ((0,-1;1,0); 0), T^n = ((1,n;0,1); (n s, 0)) with
// s = (1/2, ..., 1/2) (or without the s-shift), lattice translations.
GroupElement generator_S(int k);
GroupElement generator_T(int k, std::int64_t n = 1, bool shifted = true);
GroupElement generator_lattice(const std::vector<std::int64_t>& m);

enum class TokenKind { S, T, Lattice };

struct ReductionToken {
    TokenKind kind = TokenKind::S;
    std::int64_t power = 0;               // T^power
    std::vector<std::int64_t> shift;      // lattice translation
    GroupElement element(int k) const;
};

// tokens are listed in application order: reduced = t_N ... t_1 original.
struct ReductionWord {
    std::vector<ReductionToken> tokens;
    GroupPoint reduced;
    // Applies the inverse word to the reduced point.
    GroupPoint replay() const;
};

ReductionWord reduce_to_fundamental(const GroupPoint& g);
bool in_fundamental_domain(const GroupPoint& g);

// ---- metaplectic transform ------------------------------------------------------

struct UPhiOptions {
    double abs_tol = 1e-13;   // radial quadrature tolerance
};

// f_phi at radius w_norm for f(w) = psi(|w|^2). phi is a raw angle
// (sigma = 2 floor(phi/pi) + 1); phi = 0 is the identity; multiples of pi
// other than 0 are rejected. Every term is transformed in closed form: a
// Gaussian maps to a Gaussian, and r^p exp(-pi s r) is (-1/pi)^p d^p/ds^p of
// one, so its image is a polynomial in |w|^2 times a Gaussian.
cplx u_phi_transform(const TestPsi& psi, double phi, double w_norm, int k, const UPhiOptions& opts = {});
// Closed form for f(w) = exp(-pi s |w|^2): returns f_phi(w).
cplx u_phi_gaussian(double s, double phi, double w_norm, int k);
// Closed form parameters: f_phi(w) = prefactor * exp(-pi s_out |w|^2).
void u_phi_gaussian_params(double s, double phi, int k, cplx& prefactor, cplx& s_out);
// Radial Hankel quadrature for every term (independent of the closed form).
cplx u_phi_quadrature(const TestPsi& psi, double phi, double w_norm, int k, const UPhiOptions& opts = {});

// f_phi as a sum of exp(-pi decay |w|^2) * poly(|w|^2), built once per (psi, phi, k).
class MetaplecticImage {
public:
    MetaplecticImage(const TestPsi& psi, double phi, int k, const UPhiOptions& opts = {});
    cplx operator()(double w_norm) const;
    // W such that |f_phi(w)| < tol whenever |w| >= W.
    double truncation_radius(double tol) const;
    bool identity() const { return identity_; }

    struct Term {
        cplx decay;               // Re > 0
        std::vector<cplx> poly;   // coefficients of 1, r, r^2, ... with r = |w|^2
    };
    const std::vector<Term>& terms() const { return terms_; }

private:
    TestPsi psi_;
    bool identity_ = false;
    std::vector<Term> terms_;
};

// ---- theta sums ------------------------------------------------------------------

struct ThetaOptions {
    double tol = 1e-14;
    UPhiOptions uphi{};
};

struct ThetaSumResult {
    cplx value;
    double truncation_error = 0.0;
    std::size_t terms = 0;
};

ThetaSumResult theta_sum(const TestPsi& psi, const GroupPoint& g, const ThetaOptions& opts = {});
// Theta_f * conj(Theta_g)
cplx theta_pair(const TestPsi& f, const TestPsi& g, const GroupPoint& point, const ThetaOptions& opts = {});
// v^{k/2} sum_m f_phi((m-y) sqrt v) conj(g_phi(...)), and its single nearest-point term.
cplx cusp_diagonal(const TestPsi& f, const TestPsi& g, const GroupPoint& point, const ThetaOptions& opts = {});
cplx cusp_nearest(const TestPsi& f, const TestPsi& g, const GroupPoint& point, const ThetaOptions& opts = {});

// int_{R^k} f conj(g) for f = psi1(|w|^2), g = psi2(|w|^2), closed form.
double mean_square_haar(const TestPsi& psi1, const TestPsi& psi2, int k);

// ---- horocycle integrals ----------------------------------------------------------

struct ThetaIntegralOptions {
    double tol = 1e-14;                 // psi envelope truncation
    double max_panel_width = 0.25;
    std::size_t panel_budget = 20'000'000;
    bool richardson = true;             // also run at half the panel width
    Parallelism par{};
    std::size_t memory_budget = 200'000'000;
};

struct ThetaIntegralResult {
    double value = 0.0;
    double error_estimate = 0.0;        // |I(w/2) - I(w)| when richardson is on
    std::size_t panels = 0;
    std::size_t points = 0;             // distinct eigenvalues used
    double truncation_error = 0.0;
};

// v^sigma int Theta_f conj(Theta_g)(u + iv, 0; (0, alpha)) h(v^sigma u) du
// from the eigenvalues of `slice`; the slice must cover W^2 / v.
ThetaIntegralResult horocycle_theta_integral(const SpectrumSlice& slice, const TestPsi& psi1,
                                             const TestPsi& psi2, const WeightH& h, double v, double sigma,
                                             const ThetaIntegralOptions& opts = {});
// Spectrum cutoff needed by the envelope truncation at this v.
double theta_cutoff(const TestPsi& psi1, const TestPsi& psi2, double v, double tol = 1e-14);

// (1/B_k) lambda^{-(k/2-1)} int Theta_f conj(Theta_g)(u + i/lambda, 0; (0, alpha)) h(lambda^{-(k/2-1)} u) du
ThetaIntegralResult r2_theta_integral(const TestPsi& psi1, const TestPsi& psi2, const WeightH& h, double lambda,
                                      const TorusSpec& spec, const ThetaIntegralOptions& opts = {});
ThetaIntegralResult r2_theta_integral(const SpectrumSlice& slice, const TestPsi& psi1, const TestPsi& psi2,
                                      const WeightH& h, double lambda, const ThetaIntegralOptions& opts = {});

namespace serial {
// Reference: per-node direct summation with one exp per (point, node).
ThetaIntegralResult horocycle_theta_integral(const SpectrumSlice& slice, const TestPsi& psi1,
                                             const TestPsi& psi2, const WeightH& h, double v, double sigma,
                                             const ThetaIntegralOptions& opts = {});
}  // namespace serial

}  // namespace qtorus
