#include "qtorus/core_types.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include "qtorus/errors.hpp"

namespace qtorus {

using std::numbers::pi;

double unit_ball_volume(int k) {
    if (k <= 0) throw InvalidArgument("unit_ball_volume: k must be positive");
    return std::pow(pi, 0.5 * k) / std::tgamma(0.5 * k + 1.0);
}

std::int64_t gcd64(std::int64_t a, std::int64_t b) {
    return std::gcd(a, b);
}

std::int64_t lcm64(std::int64_t a, std::int64_t b) {
    if (a == 0 || b == 0) return 0;
    std::int64_t g = std::gcd(a, b);
    std::int64_t out;
    if (__builtin_mul_overflow(a / g, b, &out)) throw ResourceExhausted("lcm overflows 64 bits");
    return out < 0 ? -out : out;
}

Rational Rational::make(std::int64_t num, std::int64_t den) {
    if (den == 0) throw InvalidArgument("rational with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    std::int64_t g = std::gcd(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    return Rational{num, den};
}

double reduce_mod1(double x) {
    if (!std::isfinite(x)) throw InvalidArgument("shift component is not finite");
    double r = x - std::floor(x);
    if (r >= 1.0) r = 0.0;
    return r;
}

Rational reduce_mod1(Rational r) {
    std::int64_t n = r.num % r.den;
    if (n < 0) n += r.den;
    return Rational{n, r.den};
}

TorusSpec::TorusSpec(std::vector<double> alpha)
    : TorusSpec(std::move(alpha), {}) {}

TorusSpec::TorusSpec(std::vector<double> alpha, std::vector<std::optional<Rational>> exact)
    : alpha_(std::move(alpha)), exact_(std::move(exact)) {
    if (alpha_.size() < 2) throw InvalidArgument("TorusSpec: dimension k must be >= 2");
    if (exact_.empty()) exact_.resize(alpha_.size());
    if (exact_.size() != alpha_.size())
        throw InvalidArgument("TorusSpec: exact components must match dimension");
    for (std::size_t j = 0; j < alpha_.size(); ++j) {
        if (exact_[j]) {
            Rational r = reduce_mod1(Rational::make(exact_[j]->num, exact_[j]->den));
            if (std::fabs(r.value() - reduce_mod1(alpha_[j])) > 1e-12 &&
                std::fabs(std::fabs(r.value() - reduce_mod1(alpha_[j])) - 1.0) > 1e-12)
                throw InvalidArgument("TorusSpec: exact component disagrees with float value");
            exact_[j] = r;
            alpha_[j] = r.value();
        } else {
            alpha_[j] = reduce_mod1(alpha_[j]);
        }
    }
}

TorusSpec TorusSpec::from_rationals(const std::vector<Rational>& alpha) {
    std::vector<double> a;
    std::vector<std::optional<Rational>> ex;
    for (const auto& r : alpha) {
        Rational rr = reduce_mod1(Rational::make(r.num, r.den));
        a.push_back(rr.value());
        ex.emplace_back(rr);
    }
    return TorusSpec(std::move(a), std::move(ex));
}

std::optional<std::vector<Rational>> TorusSpec::alpha_exact() const {
    if (!fully_rational()) return std::nullopt;
    std::vector<Rational> out;
    for (const auto& e : exact_) out.push_back(*e);
    return out;
}

bool TorusSpec::fully_rational() const {
    for (const auto& e : exact_)
        if (!e) return false;
    return true;
}

bool TorusSpec::any_exact() const {
    for (const auto& e : exact_)
        if (e) return true;
    return false;
}

std::int64_t TorusSpec::common_denominator() const {
    std::int64_t q = 1;
    for (const auto& e : exact_)
        if (e) q = lcm64(q, e->den);
    return q;
}

std::string TorusSpec::digest() const {
    std::string bytes;
    bytes += std::to_string(k());
    for (double a : alpha_) {
        auto bits = std::bit_cast<std::uint64_t>(a);
        bytes.append(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
    return hex64(fnv1a(bytes)).substr(0, 12);
}

Window::Window(double a_, double b_) : a(a_), b(b_) {
    if (!(a <= b)) throw InvalidArgument("window requires a <= b");
}

TestPsi::TestPsi(std::vector<PsiTerm> terms) : terms_(std::move(terms)) {
    for (const auto& t : terms_) {
        if (!(t.s > 0.0)) throw InvalidArgument("TestPsi: decay rates must be positive");
        if (t.p < 0) throw InvalidArgument("TestPsi: powers must be nonnegative");
        if (!std::isfinite(t.c)) throw InvalidArgument("TestPsi: coefficient is not finite");
    }
}

TestPsi TestPsi::gaussian(double s, double c) {
    return TestPsi({PsiTerm{c, s, 0}});
}

double TestPsi::operator()(double r) const {
    double sum = 0.0;
    for (const auto& t : terms_) {
        if (t.c == 0.0) continue;
        double term = t.c * std::exp(-pi * t.s * r);
        if (t.p > 0) term *= std::pow(r, t.p);
        sum += term;
    }
    return sum;
}

double TestPsi::envelope(double r) const {
    double sum = 0.0;
    for (const auto& t : terms_) {
        if (t.c == 0.0) continue;
        double term = std::fabs(t.c) * std::exp(-pi * t.s * r);
        if (t.p > 0) term *= std::pow(r, t.p);
        sum += term;
    }
    return sum;
}

double TestPsi::radius_below(double tol) const {
    if (!(tol > 0.0)) throw InvalidArgument("radius_below: tolerance must be positive");
    double start = 0.0;
    for (const auto& t : terms_)
        if (t.c != 0.0) start = std::max(start, t.p / (pi * t.s));
    if (envelope(start) < tol) return start;
    double lo = start, hi = std::max(1.0, 2.0 * start);
    while (envelope(hi) >= tol) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) throw InvalidArgument("radius_below: envelope does not decay");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        if (envelope(mid) < tol)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

double TestPsi::min_decay() const {
    double m = 0.0;
    bool first = true;
    for (const auto& t : terms_) {
        if (t.c == 0.0) continue;
        if (first || t.s < m) m = t.s;
        first = false;
    }
    return m;
}

TestPsi TestPsi::scaled(double factor) const {
    std::vector<PsiTerm> out = terms_;
    for (auto& t : out) t.c *= factor;
    return TestPsi(std::move(out));
}

bool TestPsi::is_zero() const {
    for (const auto& t : terms_)
        if (t.c != 0.0) return false;
    return true;
}

namespace {
double gamma_moment(double n, double rate) {
    // int_0^inf r^n e^{-pi rate r} dr
    return std::exp(std::lgamma(n + 1.0) - (n + 1.0) * std::log(pi * rate));
}
}  // namespace

double psi_moment(const TestPsi& a, const TestPsi& b, double mu) {
    if (!(mu > -1.0)) throw InvalidArgument("psi_moment: exponent must exceed -1");
    double sum = 0.0;
    for (const auto& ta : a.terms()) {
        if (ta.c == 0.0) continue;
        for (const auto& tb : b.terms()) {
            if (tb.c == 0.0) continue;
            sum += ta.c * tb.c * gamma_moment(ta.p + tb.p + mu, ta.s + tb.s);
        }
    }
    return sum;
}

double psi_moment(const TestPsi& a, double mu) {
    if (!(mu > -1.0)) throw InvalidArgument("psi_moment: exponent must exceed -1");
    double sum = 0.0;
    for (const auto& t : a.terms())
        if (t.c != 0.0) sum += t.c * gamma_moment(t.p + mu, t.s);
    return sum;
}

double psi_integral_rk(const TestPsi& psi, int k) {
    return 0.5 * k * unit_ball_volume(k) * psi_moment(psi, 0.5 * k - 1.0);
}

std::string_view to_string(HShape shape) {
    return shape == HShape::triangle ? "triangle" : "raised-cosine";
}

HShape parse_hshape(std::string_view name) {
    if (name == "triangle") return HShape::triangle;
    if (name == "raised-cosine" || name == "raised_cosine" || name == "cosine") return HShape::raised_cosine;
    throw InvalidArgument("unknown weight shape '" + std::string(name) + "'");
}

WeightH::WeightH(double half_width, HShape shape, double amplitude)
    : a_(half_width), shape_(shape), amp_(amplitude) {
    if (!(half_width > 0.0) || !std::isfinite(half_width))
        throw InvalidArgument("WeightH: half-width must be positive");
    if (!std::isfinite(amplitude)) throw InvalidArgument("WeightH: amplitude is not finite");
}

double WeightH::operator()(double u) const {
    double t = std::fabs(u) / a_;
    if (t >= 1.0) return 0.0;
    if (shape_ == HShape::triangle) return amp_ * (1.0 - t);
    return amp_ * 0.5 * (1.0 + std::cos(pi * t));
}

double WeightH::hat(double s) const {
    if (shape_ == HShape::triangle) {
        double x = 0.5 * pi * s * a_;
        double sinc = std::fabs(x) < 1e-6 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
        return amp_ * a_ * sinc * sinc;
    }
    double x = std::fabs(pi * s * a_);
    if (x < 1e-6) return amp_ * a_ * pi * pi * (1.0 - x * x / 6.0) / (pi * pi - x * x);
    // sin x / (pi^2 - x^2) rewritten through t = pi - x to keep the removable
    // point x = pi well conditioned.
    double t = pi - x;
    double sinc_t = std::fabs(t) < 1e-6 ? 1.0 - t * t / 6.0 : std::sin(t) / t;
    return amp_ * a_ * pi * pi * sinc_t / (x * (pi + x));
}

double WeightH::hat_envelope(double s) const {
    double scale = std::fabs(amp_) * a_;
    if (shape_ == HShape::triangle) {
        double x = std::fabs(0.5 * pi * s * a_);
        return x <= 1.0 ? scale : scale / (x * x);
    }
    double x = std::fabs(pi * s * a_);
    if (x <= 2.0 * pi) return scale;
    return scale * pi * pi / (x * (x * x - pi * pi));
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace qtorus
