#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qtorus/diophantine.hpp"
#include "qtorus/errors.hpp"
#include "qtorus/paircorr.hpp"
#include "qtorus/theta.hpp"

using namespace qtorus;
using oracle::pi;

namespace {

GroupPoint random_point(std::mt19937_64& rng, int k, double v_lo = 0.05, double v_hi = 5.0) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> xi(2 * k);
    for (auto& x : xi) x = 4.0 * U(rng) - 2.0;
    return GroupPoint(6.0 * U(rng) - 3.0, v_lo + (v_hi - v_lo) * U(rng), 2.0 * pi * U(rng), xi);
}

double angle_diff(double a, double b) {
    double d = std::fmod(a - b, 2.0 * pi);
    if (d > pi) d -= 2.0 * pi;
    if (d < -pi) d += 2.0 * pi;
    return std::fabs(d);
}

void check_close(const GroupPoint& a, const GroupPoint& b, double tol) {
    CHECK(std::fabs(a.u - b.u) < tol);
    CHECK(std::fabs(a.v - b.v) < tol * std::max(1.0, a.v));
    CHECK(angle_diff(a.phi, b.phi) < tol);
    REQUIRE(a.xi.size() == b.xi.size());
    for (std::size_t i = 0; i < a.xi.size(); ++i) CHECK(std::fabs(a.xi[i] - b.xi[i]) < tol);
}

}  // namespace

TEST_SUITE("theta") {

TEST_CASE("group law") {
    std::mt19937_64 rng(1);
    for (int k : {2, 3}) {
        const GroupPoint e = group_identity(k);
        for (int i = 0; i < 50; ++i) {
            const GroupPoint g = random_point(rng, k);
            check_close(group_mul(g, e), g, 1e-12);
            check_close(group_mul(e, g), g, 1e-12);
            check_close(from_matrix_form(to_matrix_form(g)), g, 1e-12);
            const GroupPoint h = random_point(rng, k), f = random_point(rng, k);
            check_close(group_mul(group_mul(g, h), f), group_mul(g, group_mul(h, f)), 1e-9);
            const GroupElement gi = inverse(to_matrix_form(g));
            check_close(from_matrix_form(multiply(to_matrix_form(g), gi)), e, 1e-10);
            const Mat2 m = to_matrix_form(g).m;
            CHECK(m.a * m.d - m.b * m.c == doctest::Approx(1.0).epsilon(1e-12));
        }
        // the fiber is abelian
        std::vector<double> x1(2 * k), x2(2 * k), x12(2 * k);
        for (int j = 0; j < 2 * k; ++j) {
            x1[j] = 0.1 * j + 0.3;
            x2[j] = -0.7 * j + 0.05;
            x12[j] = x1[j] + x2[j];
        }
        check_close(group_mul(GroupPoint(0, 1, 0, x1), GroupPoint(0, 1, 0, x2)), GroupPoint(0, 1, 0, x12), 1e-15);
    }
    CHECK_THROWS_AS(GroupPoint(0.0, -1.0, 0.0, {0, 0, 0, 0}), InvalidArgument);
    CHECK_THROWS_AS(GroupPoint(0.0, 1.0, 0.0, {0, 0, 0}), InvalidArgument);
}

TEST_CASE("reduction examples") {
    const std::vector<double> z(4, 0.0);
    const ReductionWord w1 = reduce_to_fundamental(GroupPoint(5.0, 2.0, 0.0, z));
    CHECK(w1.reduced.u == doctest::Approx(0.0));
    CHECK(w1.reduced.v == doctest::Approx(2.0));
    REQUIRE(w1.tokens.size() >= 1);
    CHECK(w1.tokens[0].kind == TokenKind::T);
    CHECK(w1.tokens[0].power == -5);
    for (std::size_t i = 1; i < w1.tokens.size(); ++i) CHECK(w1.tokens[i].kind == TokenKind::Lattice);

    const ReductionWord w2 = reduce_to_fundamental(GroupPoint(0.0, 0.3, 0.0, z));
    CHECK(w2.reduced.v == doctest::Approx(1.0 / 0.3).epsilon(1e-14));
    CHECK(w2.reduced.u == doctest::Approx(0.0));
    int s_count = 0;
    for (const auto& t : w2.tokens) s_count += t.kind == TokenKind::S;
    CHECK(s_count == 1);

    const GroupPoint g3(0.49, 0.01, 0.0, z);
    const ReductionWord w3 = reduce_to_fundamental(g3);
    CHECK(in_fundamental_domain(w3.reduced));
    check_close(w3.replay(), g3, 1e-10);
}

TEST_CASE("reduction replays to the original point") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 300; ++i) {
        const int k = 2 + i % 3;
        const double v = std::exp(-8.0 + 10.0 * U(rng));
        std::vector<double> xi(2 * k);
        for (auto& x : xi) x = 10.0 * U(rng) - 5.0;
        const GroupPoint g(20.0 * U(rng) - 10.0, v, 2.0 * pi * U(rng), xi);
        const ReductionWord w = reduce_to_fundamental(g);
        const GroupPoint& r = w.reduced;
        CHECK(in_fundamental_domain(r));
        CHECK(r.u >= -0.5);
        CHECK(r.u < 0.5);
        CHECK(r.u * r.u + r.v * r.v >= 1.0 - 1e-12);
        CHECK(r.phi >= 0.0);
        CHECK(r.phi < pi);
        for (double x : r.xi) {
            CHECK(x >= -0.5);
            CHECK(x < 0.5);
        }
        check_close(w.replay(), g, 1e-10 * std::max(1.0, 1.0 / v));
        // the word as a group element maps the original point onto the reduced one
        GroupPoint cur = g;
        for (const auto& t : w.tokens) cur = act(t.element(k), cur);
        check_close(cur, r, 1e-8 * std::max(1.0, 1.0 / v));
    }
    CHECK_THROWS_AS(reduce_to_fundamental(GroupPoint(0.0, 1e-320, 0.0, {0, 0, 0, 0})), InvalidArgument);
}

TEST_CASE("metaplectic transform") {
    const TestPsi g = TestPsi::gaussian(1.0);
    for (int k : {2, 3, 4}) {
        // U^0 is the identity, exactly
        for (double w = 0.0; w < 4.0; w += 0.37) CHECK(u_phi_transform(g, 0.0, w, k) == cplx(g(w * w), 0.0));
        // the Gaussian is self-dual: U^{pi/2} f = e(-k/8) f
        const cplx ph = expi2pi(-k / 8.0);
        for (double w = 0.0; w < 4.0; w += 0.37) {
            const cplx f = u_phi_transform(g, 0.5 * pi, w, k);
            CHECK(std::abs(f - ph * std::exp(-pi * w * w)) < 1e-10);
        }
        // U^{pi/2} twice: parity (trivial on radial f) times e(-k/4)
        cplx p1, s1, p2, s2;
        u_phi_gaussian_params(1.0, 0.5 * pi, k, p1, s1);
        CHECK(std::abs(s1 - cplx(1.0, 0.0)) < 1e-15);
        u_phi_gaussian_params(s1.real(), 0.5 * pi, k, p2, s2);
        CHECK(std::abs(p1 * p2 - expi2pi(-k / 4.0)) < 1e-14);
        CHECK(std::abs(s2 - cplx(1.0, 0.0)) < 1e-15);
    }
    // closed form and Hankel quadrature agree for Gaussians at generic angles
    for (double phi : {0.3, 1.0, 2.0, 4.0, 5.5}) {
        for (int k : {2, 3}) {
            for (double w : {0.0, 0.5, 1.3, 2.7}) {
                const cplx a = u_phi_gaussian(1.7, phi, w, k);
                const cplx b = u_phi_quadrature(TestPsi::gaussian(1.7), phi, w, k);
                CHECK(std::abs(a - b) < 1e-9);
            }
        }
    }
    CHECK_THROWS_AS(u_phi_transform(g, pi, 1.0, 2), InvalidArgument);
    CHECK_THROWS_AS(u_phi_transform(g, 2.0 * pi, 1.0, 2), InvalidArgument);
}

TEST_CASE("unitarity at phi = 1") {
    const TestPsi f({{1.0, 1.0, 0}, {0.7, 0.5, 1}});
    for (int k : {2, 3}) {
        const double area = 2.0 * std::pow(pi, 0.5 * k) / std::tgamma(0.5 * k);  // surface of S^{k-1}
        const double before = area * oracle::simpson([&](double r) { return std::pow(f(r * r), 2) * std::pow(r, k - 1); }, 0.0, 12.0, 4000);
        const MetaplecticImage img(f, 1.0, k);
        const double after =
            area * oracle::simpson([&](double r) { return std::norm(img(r)) * std::pow(r, k - 1); }, 0.0, 12.0, 4000);
        CHECK(after == doctest::Approx(before).epsilon(1e-6));
        const double W = img.truncation_radius(1e-12);
        for (double r = W; r < W + 5.0; r += 0.25) CHECK(std::abs(img(r)) < 1e-12);
    }
}

TEST_CASE("theta sums") {
    const TestPsi g = TestPsi::gaussian(1.0);
    const ThetaSumResult t = theta_sum(g, GroupPoint(0.0, 1.0, 0.0, {0, 0, 0, 0}));
    const double ref = std::pow(oracle::jacobi_sum(1.0), 2);
    CHECK(std::abs(t.value - cplx(ref, 0.0)) < 1e-14);
    CHECK(t.value.real() == doctest::Approx(1.18034).epsilon(1e-5));

    // lattice translations of xi leave Theta_f conj Theta_g unchanged
    std::mt19937_64 rng(12);
    const TestPsi f2({{1.0, 0.9, 0}, {0.4, 1.5, 1}});
    for (int i = 0; i < 40; ++i) {
        const int k = 2 + i % 2;
        const GroupPoint p = random_point(rng, k, 0.3, 3.0);
        const cplx base = theta_pair(g, f2, p);
        std::vector<std::int64_t> m(2 * k);
        for (auto& x : m) x = static_cast<std::int64_t>(rng() % 7) - 3;
        const GroupPoint q = act(generator_lattice(m), p);
        CHECK(std::abs(theta_pair(g, f2, q) - base) < 1e-12 * std::max(1.0, std::abs(base)));
    }
}

TEST_CASE("generator invariance of |Theta conj Theta|") {
    std::mt19937_64 rng(21);
    const TestPsi g = TestPsi::gaussian(1.0);
    const TestPsi g2 = TestPsi::gaussian(0.6, 2.0);
    for (int i = 0; i < 30; ++i) {
        const int k = 2 + i % 2;
        GroupPoint p = random_point(rng, k, 0.4, 2.5);
        p.phi = std::fmod(p.phi, 0.5 * pi) + 0.2;  // keep phi and phi + pi/2 off the excluded multiples of pi
        const double base = std::abs(theta_pair(g, g2, p));
        const GroupPoint pt = act(generator_T(k, 1, true), p);
        CHECK(std::abs(theta_pair(g, g2, pt)) == doctest::Approx(base).epsilon(1e-8));
        const GroupPoint pt3 = act(generator_T(k, -3, true), p);
        CHECK(std::abs(theta_pair(g, g2, pt3)) == doctest::Approx(base).epsilon(1e-8));
        std::vector<std::int64_t> m(2 * k, 1);
        CHECK(std::abs(theta_pair(g, g2, act(generator_lattice(m), p))) == doctest::Approx(base).epsilon(1e-8));
        // S via the exact Gaussian branch
        const GroupPoint ps = act(generator_S(k), p);
        if (std::fabs(std::remainder(ps.phi, pi)) > 1e-3)
            CHECK(std::abs(theta_pair(g, g2, ps)) == doctest::Approx(base).epsilon(1e-8));
    }
}

TEST_CASE("spectral bridge") {
    // x = 0, phi = 0, v = 1/lambda: lambda^{k/4} Theta = sum_j psi(lambda_j / lambda) e(lambda_j u / 2)
    const PreciseVector alg = algebraic_vector(2, 2);
    const TorusSpec spec = to_spec(alg);
    const TestPsi psi({{1.0, 1.0, 0}, {0.5, 0.7, 1}});
    for (double lambda : {5.0, 12.0}) {
        const SpectrumSlice s = enumerate_spectrum(spec, lambda * psi.radius_below(1e-18));
        for (double u : {0.0, 0.17, -0.93, 2.4}) {
            std::vector<double> xi{0.0, 0.0, spec.alpha()[0], spec.alpha()[1]};
            const cplx th = theta_sum(psi, GroupPoint(u, 1.0 / lambda, 0.0, xi)).value * std::pow(lambda, 0.5);
            cplx direct = 0.0;
            for (double l : s.lambdas) direct += psi(l / lambda) * std::exp(cplx(0.0, pi * l * u));
            CHECK(std::abs(th - direct) < 1e-10 * std::max(1.0, std::abs(direct)));
        }
    }
}

TEST_CASE("cusp asymptotics") {
    const TestPsi f = TestPsi::gaussian(1.0), g({{1.0, 0.8, 0}, {0.3, 1.1, 1}});
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        GroupPoint p = random_point(rng, 2);
        p.phi = 0.3 + 0.4 * trial;
        std::vector<double> rem_nearest;
        for (double v : {4.0, 8.0, 16.0}) {
            p.v = v;
            const cplx full = theta_pair(f, g, p);
            const cplx diag = cusp_diagonal(f, g, p);
            const cplx near = cusp_nearest(f, g, p);
            if (v == 16.0) CHECK(std::abs(full - diag) < 1e-6);
            rem_nearest.push_back(std::abs(full - near));
        }
        // remainder after the nearest term decays faster than v^{-5}
        CHECK(rem_nearest[1] < rem_nearest[0] * std::pow(2.0, -5.0));
        CHECK(rem_nearest[2] < rem_nearest[1] * std::pow(2.0, -5.0));
    }
}

TEST_CASE("Haar mean square") {
    const TestPsi g = TestPsi::gaussian(1.0);
    CHECK(mean_square_haar(g, g, 2) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(mean_square_haar(g, g, 3) == doctest::Approx(std::pow(2.0, -1.5)).epsilon(1e-15));
    CHECK(mean_square_haar(g, g.scaled(0.0), 3) == 0.0);
    const std::vector<std::pair<TestPsi, TestPsi>> pairs{
        {g, g}, {g, TestPsi({{1.0, 0.5, 1}})}, {TestPsi({{2.0, 1.3, 2}, {-1.0, 0.7, 0}}), TestPsi({{1.0, 0.9, 1}})}};
    for (int k : {2, 3}) {
        const double area = 2.0 * std::pow(pi, 0.5 * k) / std::tgamma(0.5 * k);
        for (const auto& [a, b] : pairs) {
            const double ref = area * oracle::exp_sinh([&](double r) { return a(r * r) * b(r * r) * std::pow(r, k - 1); });
            CHECK(mean_square_haar(a, b, k) == doctest::Approx(ref).epsilon(1e-10));
        }
    }
}

TEST_CASE("theta integral against the direct sum") {
    const TestPsi g = TestPsi::gaussian(1.0);
    const WeightH h(1.0, HShape::triangle);
    const TorusSpec spec = to_spec(algebraic_vector(2, 2));
    for (double lambda : {6.0, 20.0}) {
        const double cut = std::max(required_cutoff(g, g, lambda, 2), theta_cutoff(g, g, 1.0 / lambda));
        const SpectrumSlice s = enumerate_spectrum(spec, cut);
        const double direct = r2_smoothed_direct(s, g, g, h, lambda).value;
        const ThetaIntegralResult t = r2_theta_integral(s, g, g, h, lambda);
        CHECK(std::fabs(t.value - direct) < 1e-10);
        // halving the panel width
        ThetaIntegralOptions o;
        o.max_panel_width = 0.125;
        CHECK(std::fabs(r2_theta_integral(s, g, g, h, lambda, o).value - t.value) < 1e-8);
        CHECK(t.error_estimate < 1e-8);
        const double ser = serial::horocycle_theta_integral(s, g, g, h, 1.0 / lambda, 0.0).value / pi;
        CHECK(std::fabs(ser - t.value) < 1e-10);
    }
    // h = 0
    CHECK(r2_theta_integral(g, g, WeightH(1.0, HShape::triangle, 0.0), 10.0, spec).value == 0.0);
    // different psi, k = 3
    const TestPsi p2({{1.0, 0.7, 1}});
    const TorusSpec s3 = to_spec(algebraic_vector(3, 2));
    const double lambda = 8.0;
    const SpectrumSlice s = enumerate_spectrum(s3, std::max(required_cutoff(g, p2, lambda, 3), theta_cutoff(g, p2, 1.0 / lambda)));
    const WeightH hc(0.8, HShape::raised_cosine);
    CHECK(std::fabs(r2_theta_integral(s, g, p2, hc, lambda).value - r2_smoothed_direct(s, g, p2, hc, lambda).value) < 1e-10);
    // a slice too small for the truncation
    const SpectrumSlice small = enumerate_spectrum(spec, 5.0);
    CHECK_THROWS_AS(r2_theta_integral(small, g, g, h, 20.0), InsufficientData);
}

}  // TEST_SUITE
