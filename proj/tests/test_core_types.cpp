#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qtorus/core_types.hpp"
#include "qtorus/errors.hpp"

using namespace qtorus;
using oracle::pi;

TEST_SUITE("core_types") {

TEST_CASE("unit ball volumes") {
    CHECK(unit_ball_volume(2) == doctest::Approx(pi).epsilon(1e-15));
    CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * pi / 3.0).epsilon(1e-15));
    CHECK(unit_ball_volume(4) == doctest::Approx(pi * pi / 2.0).epsilon(1e-15));
    CHECK(unit_ball_volume(4) == doctest::Approx(4.93480220).epsilon(1e-9));
    CHECK_THROWS_AS(unit_ball_volume(0), InvalidArgument);
}

TEST_CASE("rationals reduce with positive denominator") {
    const Rational r = Rational::make(6, -4);
    CHECK(r.num == -3);
    CHECK(r.den == 2);
    CHECK(reduce_mod1(r) == Rational::make(1, 2));
    CHECK(reduce_mod1(Rational::make(7, 3)) == Rational::make(1, 3));
    CHECK_THROWS_AS(Rational::make(1, 0), InvalidArgument);
    CHECK_THROWS_AS(lcm64(std::int64_t{1} << 40, (std::int64_t{1} << 40) - 1), ResourceExhausted);
}

TEST_CASE("torus spec reduces alpha mod 1") {
    TorusSpec s({1.25, -0.25, 3.0});
    CHECK(s.k() == 3);
    CHECK(s.alpha()[0] == 0.25);
    CHECK(s.alpha()[1] == 0.75);
    CHECK(s.alpha()[2] == 0.0);
    for (double a : s.alpha()) {
        CHECK(a >= 0.0);
        CHECK(a < 1.0);
    }
    CHECK_THROWS_AS(TorusSpec({0.5}), InvalidArgument);
    CHECK_THROWS_AS(TorusSpec({0.5, NAN}), InvalidArgument);

    const TorusSpec r = TorusSpec::from_rationals({Rational::make(1, 2), Rational::make(4, 3)});
    CHECK(r.fully_rational());
    CHECK(r.common_denominator() == 6);
    CHECK(r.alpha()[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-16));
    CHECK((*r.alpha_exact())[1] == Rational::make(1, 3));
    CHECK_FALSE(s.fully_rational());
    CHECK(s.digest() != r.digest());
    CHECK(s.digest() == TorusSpec({0.25, 0.75, 0.0}).digest());
}

TEST_CASE("window is closed and ordered") {
    Window w(0.0, 1.0);
    CHECK(w.contains(0.0));
    CHECK(w.contains(1.0));
    CHECK_FALSE(w.contains(1.0000001));
    CHECK_NOTHROW(Window(0.0, 0.0));
    CHECK_THROWS_AS(Window(1.0, 0.0), InvalidArgument);
}

TEST_CASE("test functions") {
    const TestPsi g = TestPsi::gaussian(2.0, 3.0);
    CHECK(g(0.0) == 3.0);
    CHECK(g(1.0) == doctest::Approx(3.0 * std::exp(-2.0 * pi)).epsilon(1e-15));

    const TestPsi mixed({{1.5, 1.0, 0}, {-2.0, 0.5, 2}, {0.25, 3.0, 0}});
    CHECK(mixed(0.0) == 1.75);
    for (double r = 0.0; r < 30.0; r += 0.37) CHECK(std::fabs(mixed(r)) <= mixed.envelope(r) + 1e-300);
    const double r0 = mixed.radius_below(1e-14);
    for (double r = r0; r < r0 + 50.0; r += 0.5) CHECK(mixed.envelope(r) < 1e-14);

    CHECK_THROWS_AS(TestPsi({{1.0, 0.0, 0}}), InvalidArgument);
    CHECK_THROWS_AS(TestPsi({{1.0, 1.0, -1}}), InvalidArgument);
    CHECK(TestPsi(std::vector<PsiTerm>{}).is_zero());
    CHECK(g.scaled(0.0).is_zero());
}

TEST_CASE("psi moments match quadrature") {
    const TestPsi a = TestPsi::gaussian(1.0);
    const TestPsi b({{1.0, 0.7, 1}, {0.5, 2.0, 0}});
    const TestPsi c({{2.0, 1.3, 3}, {-1.0, 0.4, 0}});
    const std::vector<std::pair<TestPsi, TestPsi>> pairs{{a, a}, {a, b}, {b, c}};
    for (double mu : {0.0, 0.5, 1.0, -0.5}) {
        for (const auto& [p, q] : pairs) {
            const double ref = oracle::exp_sinh([&](double r) { return p(r) * q(r) * std::pow(r, mu); });
            CHECK(psi_moment(p, q, mu) == doctest::Approx(ref).epsilon(1e-11));
        }
    }
    CHECK(psi_moment(a, a, 0.0) == doctest::Approx(1.0 / (2.0 * pi)).epsilon(1e-15));
    CHECK_THROWS_AS(psi_moment(a, a, -1.0), InvalidArgument);
    for (int k = 2; k <= 6; ++k) CHECK(psi_integral_rk(a, k) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("weight h and its transform") {
    for (HShape shape : {HShape::triangle, HShape::raised_cosine}) {
        const WeightH h(1.5, shape, 0.8);
        CHECK(h.hat(0.0) == doctest::Approx(h.integral()).epsilon(1e-14));
        const double area = oracle::simpson([&](double u) { return h(u); }, -1.5, 1.5, 6000);
        CHECK(h.integral() == doctest::Approx(area).epsilon(1e-10));
        CHECK(h(1.5) == 0.0);
        CHECK(h(2.0) == 0.0);
        CHECK(h(0.0) == 0.8);
        for (double s = -20.0; s <= 20.0; s += 0.173) {
            CHECK(h.hat(s) == doctest::Approx(h.hat(-s)).epsilon(1e-15));
            // int h(u) e(us/2) du = int h(u) cos(pi u s) du for even h
            const double ref = oracle::simpson([&](double u) { return h(u) * std::cos(pi * u * s); }, -1.5, 1.5, 6000);
            CHECK(std::fabs(h.hat(s) - ref) < 1e-10);
            CHECK(std::fabs(h.hat(s)) <= h.hat_envelope(std::fabs(s)) + 1e-15);
        }
        CHECK(std::fabs(h.hat(1e6)) < 1e-8);
        // 2 h(0) = int hat(s) ds
        const double inv = oracle::simpson([&](double s) { return h.hat(s); }, -4000.0, 4000.0, 4000000);
        CHECK(inv == doctest::Approx(2.0 * h.at_zero()).epsilon(shape == HShape::triangle ? 2e-4 : 1e-7));
    }
    CHECK(parse_hshape("triangle") == HShape::triangle);
    CHECK(parse_hshape("raised-cosine") == HShape::raised_cosine);
    CHECK_THROWS_AS(parse_hshape("box"), InvalidArgument);
    CHECK_THROWS_AS(WeightH(0.0, HShape::triangle), InvalidArgument);
    CHECK(WeightH(1.0, HShape::triangle).hat(0.0) == 1.0);
}

TEST_CASE("hashing and number formatting") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(hex64(0xabcULL) == "0000000000000abc");
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double x = U(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
        CHECK(std::stod(format_real(x)) == x);
    }
    CHECK(format_real(0.5) == "0.5");
}

}  // TEST_SUITE
