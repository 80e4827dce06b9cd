#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qtorus/diophantine.hpp"
#include "qtorus/errors.hpp"

using namespace qtorus;

namespace {

const char* kPi = "3.14159265358979323846264338327950288419716939937510582097494459230781640628620899862803482534211706798";
const char* kE = "2.71828182845904523536028747135266249775724709369995957496696762772407663035354759457138217852516642742";

// ||q x|| for a double-double x computed in long double; enough for q <= 1e5
double dist_oracle(const PreciseReal& x, std::int64_t q) {
    const long double v = (static_cast<long double>(x.hi) + static_cast<long double>(x.lo)) * static_cast<long double>(q);
    const long double f = v - std::floor(v);
    return static_cast<double>(std::min(f, 1.0L - f));
}

}  // namespace

TEST_SUITE("diophantine") {

TEST_CASE("constructions") {
    const PreciseVector a2 = algebraic_vector(2, 2);
    REQUIRE(a2.size() == 2);
    CHECK(a2[0].value() == doctest::Approx(0.259921).epsilon(1e-6));
    CHECK(a2[1].value() == doctest::Approx(0.587401).epsilon(1e-6));
    CHECK(a2[0].value() == doctest::Approx(std::cbrt(2.0) - 1.0).epsilon(1e-15));

    const PreciseVector a3 = algebraic_vector(3, 2);
    CHECK(a3[0].value() == doctest::Approx(std::pow(2.0, 0.25) - 1.0).epsilon(1e-15));
    CHECK(a3[1].value() == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-15));
    CHECK(a3[2].value() == doctest::Approx(std::pow(2.0, 0.75) - 1.0).epsilon(1e-15));
    // double-double: the low part carries the next 50 bits of (cbrt 2 - 1)
    CHECK(std::fabs(a2[0].lo) < 1e-16);
    CHECK(std::fabs(a2[0].lo) > 0.0);

    const PreciseVector c3 = critical_vector(3, Rational::make(0, 1), Rational::make(1, 2));
    REQUIRE(c3.size() == 3);
    CHECK(c3[0].value() == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-15));
    CHECK(c3[1].exact == Rational::make(0, 1));
    CHECK(c3[2].exact == Rational::make(1, 2));
    CHECK_FALSE(c3[0].exact.has_value());

    const PreciseVector c4 = critical_vector(4, Rational::make(1, 4), Rational::make(3, 4));
    CHECK(c4[0].value() == doctest::Approx(std::cbrt(2.0) - 1.0).epsilon(1e-15));
    CHECK(c4[1].value() == doctest::Approx(std::cbrt(4.0) - 1.0).epsilon(1e-15));
    CHECK(c4[2].exact == Rational::make(1, 4));
    CHECK(c4[3].exact == Rational::make(3, 4));

    CHECK_THROWS_AS(algebraic_vector(2, 1), InvalidArgument);
    CHECK_THROWS_AS(critical_vector(2, Rational::make(0, 1), Rational::make(0, 1)), InvalidArgument);
    CHECK(is_perfect_power(8));
    CHECK(is_perfect_power(9));
    CHECK_FALSE(is_perfect_power(12));
}

TEST_CASE("precise decimals") {
    const PreciseReal p = parse_precise(kPi);
    CHECK(p.hi == doctest::Approx(3.14159265358979323846 - 3.0).epsilon(1e-16));
    CHECK(std::fabs(p.lo) < 1e-16);
    CHECK(parse_precise("0.5").hi == 0.5);
    CHECK(parse_precise("-0.25").hi == 0.75);
    CHECK(parse_precise("1e-3").hi == doctest::Approx(0.001).epsilon(1e-15));
    CHECK_THROWS_AS(parse_precise("abc"), InvalidArgument);
    CHECK_THROWS_AS(parse_precise(""), InvalidArgument);
    const PreciseReal r = precise_from_rational(Rational::make(5, 3));
    CHECK(r.exact == Rational::make(2, 3));
}

TEST_CASE("approximation error against long double") {
    const PreciseVector a = algebraic_vector(2, 2);
    std::mt19937_64 rng(4);
    for (int i = 0; i < 300; ++i) {
        const std::int64_t q = 1 + static_cast<std::int64_t>(rng() % 100000);
        const double ref = std::max(dist_oracle(a[0], q), dist_oracle(a[1], q));
        CHECK(approximation_error(a, q) == doctest::Approx(ref).epsilon(1e-9));
    }
}

TEST_CASE("rational vectors") {
    const PreciseVector a{precise_from_rational(Rational::make(1, 2)), precise_from_rational(Rational::make(1, 3))};
    const DiophReport r = estimate_type(a, 10);
    CHECK(r.rational_flag);
    CHECK(r.rational_q == 6);
    CHECK(approximation_error(a, 6) == 0.0);
    CHECK(std::isinf(r.kappa_hat));
    // irrational components never give e(q) = 0
    CHECK_FALSE(estimate_type(algebraic_vector(2, 2), 1000).rational_flag);
    // decimals equal to a rational with small denominator are still flagged
    const PreciseVector d{parse_precise("0.25"), parse_precise("0.75")};
    CHECK(estimate_type(d, 10).rational_flag);
}

TEST_CASE("type estimates") {
    const DiophReport a2 = estimate_type(algebraic_vector(2, 2), 100000);
    // independent high-precision scan: best q = 38781, e = 0.001764027
    CHECK(a2.worst_q == 38781);
    CHECK(a2.worst_error == doctest::Approx(0.001764027).epsilon(1e-6));
    CHECK(a2.kappa_hat == doctest::Approx(1.550699).epsilon(1e-6));
    CHECK(std::fabs(a2.kappa_hat - 1.5) < 0.06);
    CHECK(a2.worst_error <= a2.dirichlet_bound);

    const PreciseVector pe{parse_precise(kPi), parse_precise(kE)};
    const DiophReport r_pe = estimate_type(pe, 10000);
    CHECK(r_pe.kappa_hat >= 1.5);
    CHECK(r_pe.kappa_hat <= 2.0);
    CHECK(r_pe.kappa_hat == doctest::Approx(1.577).epsilon(1e-3));

    const DiophReport a3 = estimate_type(algebraic_vector(3, 2), 100000);
    CHECK(a3.kappa_hat == doctest::Approx(1.389).epsilon(1e-3));
    CHECK(a3.kappa_hat >= 1.0 + 1.0 / 3.0 - 0.01);

    // critical vectors: type 1 + 1/(k-2), carried by the rational block
    const DiophReport c4 = estimate_type(critical_vector(4, Rational::make(1, 4), Rational::make(3, 4)), 100000);
    CHECK(std::fabs(c4.kappa_hat - 1.5) < 0.05);
    const DiophReport c3 = estimate_type(critical_vector(3, Rational::make(0, 1), Rational::make(1, 2)), 100000);
    CHECK(std::fabs(c3.kappa_hat - 2.0) < 0.1);
}

TEST_CASE("invariances and monotonicity") {
    const PreciseVector a = algebraic_vector(3, 2);
    const DiophReport base = estimate_type(a, 20000);
    PreciseVector perm{a[2], a[0], a[1]};
    const DiophReport rp = estimate_type(perm, 20000);
    CHECK(rp.kappa_hat == base.kappa_hat);
    CHECK(rp.worst_q == base.worst_q);
    // an integer shift reduces to the same components
    PreciseVector shifted = a;
    shifted[0] = parse_precise("1.18920711500272106671749997056047591529297209246381741301900222410");
    CHECK(shifted[0].hi == doctest::Approx(a[0].hi).epsilon(1e-15));
    CHECK(estimate_type(shifted, 20000).worst_q == base.worst_q);

    double prev = 0.0;
    for (std::int64_t Q : {100, 1000, 10000, 50000}) {
        const DiophReport r = estimate_type(a, Q);
        CHECK(r.kappa_sup >= prev);
        prev = r.kappa_sup;
        // Dirichlet: min e(q) never exceeds 1 / floor(Q^{1/k})
        CHECK(r.worst_error <= r.dirichlet_bound);
        CHECK(r.kappa_hat >= 1.0 + std::log(std::floor(std::cbrt(static_cast<double>(Q)))) / std::log(static_cast<double>(Q)) - 1e-12);
    }
}

TEST_CASE("scan trace and records") {
    const PreciseVector a = algebraic_vector(2, 3);
    const auto trace = approximation_trace(a, 5000);
    REQUIRE(trace.size() == 5001);
    const DiophReport r = estimate_type(a, 5000);
    double best = INFINITY;
    std::size_t rec = 0;
    for (std::int64_t q = 1; q <= 5000; ++q) {
        CHECK(trace[q] == approximation_error(a, q));
        if (trace[q] < best) {
            best = trace[q];
            REQUIRE(rec < r.records.size());
            CHECK(r.records[rec].first == q);
            CHECK(r.records[rec].second == trace[q]);
            ++rec;
        }
    }
    CHECK(rec == r.records.size());
    CHECK(r.worst_error == best);
    const DiophReport s = serial::estimate_type(a, 5000);
    CHECK(s.kappa_hat == r.kappa_hat);
    CHECK(s.records == r.records);
    const DiophReport p = estimate_type(a, 5000, Parallelism{4});
    CHECK(p.records == r.records);
    CHECK(dioph_csv_rows(r).size() == r.records.size());
}

}  // TEST_SUITE
