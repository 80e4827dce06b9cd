#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qtorus {

// Volume of the unit ball in R^k.
double unit_ball_volume(int k);

struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    // Reduced form with den > 0.
    static Rational make(std::int64_t num, std::int64_t den);
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    bool operator==(const Rational&) const = default;
};

std::int64_t gcd64(std::int64_t a, std::int64_t b);
// Throws ResourceExhausted on overflow.
std::int64_t lcm64(std::int64_t a, std::int64_t b);

// Dimension plus shift vector, reduced mod 1. Components may individually
// carry an exact rational value (all of them for rational alpha, a trailing
// block for critical vectors).
class TorusSpec {
public:
    explicit TorusSpec(std::vector<double> alpha);
    TorusSpec(std::vector<double> alpha, std::vector<std::optional<Rational>> exact);
    static TorusSpec from_rationals(const std::vector<Rational>& alpha);

    int k() const { return static_cast<int>(alpha_.size()); }
    const std::vector<double>& alpha() const { return alpha_; }
    const std::optional<Rational>& exact_component(int j) const { return exact_[j]; }
    const std::vector<std::optional<Rational>>& exact_components() const { return exact_; }

    // The full rational vector, present only when every component is exact.
    std::optional<std::vector<Rational>> alpha_exact() const;
    bool fully_rational() const;
    bool any_exact() const;
    // lcm of the exact components' denominators (1 if none are exact).
    std::int64_t common_denominator() const;

    double ball_volume() const { return unit_ball_volume(k()); }
    // Stable short hex digest of k and the alpha bit patterns.
    std::string digest() const;

private:
    std::vector<double> alpha_;
    std::vector<std::optional<Rational>> exact_;
};

double reduce_mod1(double x);
Rational reduce_mod1(Rational r);

struct Window {
    double a = 0.0;
    double b = 0.0;
    Window() = default;
    Window(double a_, double b_);
    bool contains(double d) const { return d >= a && d <= b; }
};

// psi(r) = sum_i c_i r^{p_i} exp(-pi s_i r) on r >= 0.
struct PsiTerm {
    double c = 0.0;
    double s = 1.0;
    int p = 0;
    bool operator==(const PsiTerm&) const = default;
};

class TestPsi {
public:
    TestPsi() = default;
    explicit TestPsi(std::vector<PsiTerm> terms);
    static TestPsi gaussian(double s = 1.0, double c = 1.0);

    const std::vector<PsiTerm>& terms() const { return terms_; }
    double operator()(double r) const;
    // sum_i |c_i| r^{p_i} exp(-pi s_i r): dominates |psi| and is eventually decreasing.
    double envelope(double r) const;
    // Smallest-found r0 such that envelope(r) < tol for every r >= r0.
    double radius_below(double tol) const;
    double min_decay() const;
    TestPsi scaled(double factor) const;
    bool is_zero() const;
    bool operator==(const TestPsi&) const = default;

private:
    std::vector<PsiTerm> terms_;
};

// int_0^inf a(r) b(r) r^mu dr, closed form (mu > -1).
double psi_moment(const TestPsi& a, const TestPsi& b, double mu);
// int_0^inf a(r) r^mu dr.
double psi_moment(const TestPsi& a, double mu);
// int_{R^k} psi(|w|^2) dw.
double psi_integral_rk(const TestPsi& psi, int k);

enum class HShape { triangle, raised_cosine };

std::string_view to_string(HShape shape);
HShape parse_hshape(std::string_view name);

// Even, continuous weight supported on [-a, a].
class WeightH {
public:
    WeightH(double half_width, HShape shape, double amplitude = 1.0);

    double half_width() const { return a_; }
    HShape shape() const { return shape_; }
    double amplitude() const { return amp_; }

    double operator()(double u) const;
    // int h(u) e(us/2) du
    double hat(double s) const;
    // Nonincreasing bound on |hat| in |s|.
    double hat_envelope(double s) const;
    double integral() const { return amp_ * a_; }
    double at_zero() const { return amp_; }

private:
    double a_;
    HShape shape_;
    double amp_;
};

inline double h_hat(const WeightH& h, double s) { return h.hat(s); }

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 14695981039346656037ULL);
std::string hex64(std::uint64_t v);
// Round-trip decimal form used in every CSV (%.17g).
std::string format_real(double v);

}  // namespace qtorus
