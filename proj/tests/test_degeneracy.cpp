#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qtorus/degeneracy.hpp"
#include "qtorus/diophantine.hpp"
#include "qtorus/errors.hpp"
#include "qtorus/paircorr.hpp"

using namespace qtorus;

namespace {

TorusSpec zero_spec(int k) { return TorusSpec::from_rationals(std::vector<Rational>(k, Rational::make(0, 1))); }

const std::vector<double> kGrid{1e2, 1e3, 1e4, 1e5, 1e6};

}  // namespace

TEST_SUITE("degeneracy") {

TEST_CASE("hand counts") {
    // norms^2 <= 3 in k = 3 means X = 3^{3/2}
    CHECK(count_equal_pairs(zero_spec(3), std::pow(3.0, 1.5) * (1 + 1e-12)) == 218);
    CHECK(count_equal_pairs(zero_spec(2), 5.0) == 92);
    const Rational h = Rational::make(1, 2);
    CHECK(count_equal_pairs(TorusSpec::from_rationals({h, h}), 0.5) == 12);
    CHECK(count_equal_pairs(TorusSpec::from_rationals({h, h}), 0.49) == 0);
}

TEST_CASE("representation numbers") {
    for (int k : {2, 3}) {
        const auto mult = key_multiplicities(zero_spec(k), 100.0);
        for (int n = 1; n <= 100; ++n) {
            const auto it = mult.find(n);
            const std::int64_t got = it == mult.end() ? 0 : it->second;
            CHECK(got == oracle::r_k(k, n));
        }
    }
}

TEST_CASE("randomized tie counts against brute force") {
    std::mt19937_64 rng(77);
    int cases = 0;
    for (int trial = 0; trial < 110; ++trial) {
        const int k = 2 + static_cast<int>(rng() % 3);
        const std::int64_t q = 1 + static_cast<std::int64_t>(rng() % 6);
        std::vector<Rational> alpha;
        std::vector<std::int64_t> p;
        for (int j = 0; j < k; ++j) {
            const std::int64_t num = static_cast<std::int64_t>(rng() % q);
            alpha.push_back(Rational::make(num, q));
            p.push_back(num);
        }
        const TorusSpec spec = TorusSpec::from_rationals(alpha);
        const double L = k == 4 ? 2.0 + static_cast<double>(rng() % 9) : 2.0 + static_cast<double>(rng() % 49);
        const auto keys = oracle::naive_keys(p, q, L);
        // slightly above L^{k/2} so the shell at exactly L survives rounding
        const double X = std::pow(L, 0.5 * k) * (1.0 + 1e-12);
        CHECK(count_equal_pairs(spec, X) == oracle::naive_equal_pairs(keys));
        ++cases;
    }
    CHECK(cases >= 100);
}

TEST_CASE("even, monotone and zero without repeats") {
    const TorusSpec spec = TorusSpec::from_rationals({Rational::make(1, 3), Rational::make(1, 5), Rational::make(0, 1)});
    std::int64_t prev = 0;
    for (double X = 1.0; X < 3000.0; X *= 1.7) {
        const std::int64_t c = count_equal_pairs(spec, X);
        CHECK(c % 2 == 0);
        CHECK(c >= prev);
        prev = c;
    }
    // a single point below the second eigenvalue
    CHECK(count_equal_pairs(TorusSpec::from_rationals({Rational::make(1, 7), Rational::make(2, 5)}), 0.05) == 0);
    // irrational data has no exact keys
    CHECK_THROWS_AS(count_equal_pairs(to_spec(algebraic_vector(2, 2)), 100.0), InvalidArgument);
}

TEST_CASE("windowed degenerate correlation equals the tie count") {
    for (int k : {2, 3, 4}) {
        const TorusSpec spec = zero_spec(k);
        for (double X : {50.0, 500.0, 3000.0}) {
            const SpectrumSlice s = enumerate_spectrum(spec, std::pow(2.0 * X, 2.0 / k) * 1.001);
            const CorrEstimate e = r2_windowed(s, X, Window(0.0, 0.0));
            CHECK(static_cast<double>(e.pair_count) == static_cast<double>(count_equal_pairs_between(spec, X, 2.0 * X)));
            CHECK(e.value == static_cast<double>(count_equal_pairs_between(spec, X, 2.0 * X)) / (unit_ball_volume(k) * X));
        }
    }
}

TEST_CASE("groups: serial and parallel agree") {
    for (const TorusSpec& spec : {zero_spec(3), TorusSpec::from_rationals({Rational::make(1, 2), Rational::make(1, 3),
                                                                            Rational::make(0, 1), Rational::make(1, 4)}),
                                  to_spec(critical_vector(3, Rational::make(0, 1), Rational::make(1, 2)))}) {
        const auto ref = serial::degenerate_groups(spec, 2000.0);
        for (int w : {1, 4}) {
            const auto g = degenerate_groups(spec, 2000.0, Parallelism{w});
            REQUIRE(g.size() == ref.size());
            for (std::size_t i = 0; i < g.size(); ++i) {
                CHECK(g[i].lambda == ref[i].lambda);
                CHECK(g[i].size == ref[i].size);
                CHECK(g[i].size >= 2);
            }
        }
    }
}

TEST_CASE("critical vectors tie only with equal irrational coordinates") {
    // alpha = (frac sqrt 2, 0, 1/2): ties come from the rational (0, 1/2) block
    const TorusSpec spec = to_spec(critical_vector(3, Rational::make(0, 1), Rational::make(1, 2)));
    CHECK_FALSE(spec.fully_rational());
    const double a0 = spec.alpha()[0];
    const double L = 20.0;
    // brute force over exact keys of the trailing block per leading coordinate
    std::int64_t brute = 0;
    const int r = 7;
    std::vector<std::pair<int, std::int64_t>> pts;  // (m0, 4 * |(m1, m2) - (0, 1/2)|^2)
    for (int m0 = -r; m0 <= r; ++m0)
        for (int m1 = -r; m1 <= r; ++m1)
            for (int m2 = -r; m2 <= r; ++m2) {
                const double d0 = m0 - a0;
                const std::int64_t key = 4LL * m1 * m1 + (2LL * m2 - 1) * (2LL * m2 - 1);
                if (d0 * d0 + static_cast<double>(key) / 4.0 <= L) pts.push_back({m0, key});
            }
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = 0; j < pts.size(); ++j)
            if (i != j && pts[i] == pts[j]) ++brute;
    CHECK(count_equal_pairs(spec, std::pow(L, 1.5)) == brute);
}

TEST_CASE("growth of the normalized count") {
    // frozen from an independent sum over n of r_k(n)(r_k(n) - 1)
    const std::vector<std::vector<std::int64_t>> frozen{
        {2388, 32644, 418088, 5100700, 60183492},
        {13228, 285520, 6520866, 141678220, 3068223552},
        {49416, 1277776, 38598184, 1216458216, 38489692984}};
    for (int k : {2, 3, 4}) {
        const DegeneracyCurve c = degeneracy_curve(zero_spec(k), kGrid);
        REQUIRE(c.samples.size() == 5);
        for (std::size_t i = 0; i < 5; ++i) {
            CHECK(c.samples[i].count == frozen[k - 2][i]);
            CHECK(c.samples[i].normalized == static_cast<double>(frozen[k - 2][i]) / kGrid[i]);
            if (i) CHECK(c.samples[i].X > c.samples[i - 1].X);
        }
    }
    const DegeneracyCurve c3 = degeneracy_curve(zero_spec(3), kGrid);
    const GrowthFit f3 = growth_fit(c3);
    CHECK(f3.exponent >= 0.20);
    CHECK(f3.exponent <= 0.45);
    CHECK(f3.exponent == doctest::Approx(0.3426).epsilon(1e-3));

    const DegeneracyCurve c2 = degeneracy_curve(zero_spec(2), kGrid);
    const GrowthFit f2 = growth_fit(c2);
    CHECK(std::fabs(f2.exponent) <= 0.1);
    CHECK(f2.exponent == doctest::Approx(0.09967).epsilon(1e-3));
    CHECK(f2.model == GrowthModel::logarithmic);

    const DegeneracyCurve c4 = degeneracy_curve(zero_spec(4), kGrid);
    const GrowthFit f4 = growth_fit(c4);
    CHECK(f4.exponent >= 0.35);
    CHECK(f4.exponent <= 0.62);
    CHECK(f4.exponent == doctest::Approx(0.4762).epsilon(1e-3));
    CHECK(f4.model == GrowthModel::power_law);

    const std::vector<double> short_grid{1e2, 1e3};
    CHECK_THROWS_AS(growth_fit(degeneracy_curve(zero_spec(3), short_grid)), InsufficientData);
    const std::vector<double> unsorted{1e3, 1e2};
    CHECK_THROWS_AS(degeneracy_curve(zero_spec(3), unsorted), InvalidArgument);

    const auto rows = degeneracy_csv_rows(c3, f3);
    CHECK(rows.size() == 5);
}

}  // TEST_SUITE
