#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qtorus/core_types.hpp"
#include "qtorus/parallel.hpp"

namespace qtorus {

// Value in [0,1) as an unevaluated double-double hi + lo, optionally exact.
struct PreciseReal {
    double hi = 0.0;
    double lo = 0.0;
    std::optional<Rational> exact;
    double value() const { return hi; }
};

using PreciseVector = std::vector<PreciseReal>;

PreciseReal precise_from_double(double x);
PreciseReal precise_from_rational(Rational r);
// Decimal string with up to ~100 significant digits, reduced mod 1.
PreciseReal parse_precise(std::string_view decimal);
PreciseVector to_precise(std::span<const double> alpha);
std::vector<double> to_doubles(const PreciseVector& alpha);
TorusSpec to_spec(const PreciseVector& alpha);

// alpha_j = frac(theta^j), theta = base^{1/(k+1)}, j = 1..k.
PreciseVector algebraic_vector(int k, int base);
// (algebraic_vector(k-2, base), r1, r2).
PreciseVector critical_vector(int k, Rational r1, Rational r2, int base = 2);

bool is_perfect_power(std::int64_t n);

// e(q) = max_j || q alpha_j ||
double approximation_error(const PreciseVector& alpha, std::int64_t q);

struct DiophReport {
    PreciseVector alpha;
    std::int64_t q_max = 0;
    // 1 + log(1/delta)/log Q_max with delta = min_{q <= Q_max} e(q)
    double kappa_hat = 0.0;
    // 1 + max_{2 <= q <= Q_max, e(q) > 0} log(1/e(q))/log q  (nondecreasing in Q_max)
    double kappa_sup = 0.0;
    std::int64_t worst_q = 0;   // argmin e(q), smallest such q
    double worst_error = 0.0;   // delta
    bool rational_flag = false;
    std::int64_t rational_q = 0;
    double c_hat = 0.0;         // min_q e(q) q^{kappa_hat - 1}
    double dirichlet_bound = 0.0;  // 1 / floor(Q_max^{1/k}); delta must stay below it
    // q at which e(q) reaches a new minimum, with that e(q)
    std::vector<std::pair<std::int64_t, double>> records;
};

DiophReport estimate_type(const PreciseVector& alpha, std::int64_t q_max, Parallelism par = {});
std::vector<double> approximation_trace(const PreciseVector& alpha, std::int64_t q_max, Parallelism par = {});

std::string dioph_csv_header();
std::vector<std::string> dioph_csv_rows(const DiophReport& report);

namespace serial {
DiophReport estimate_type(const PreciseVector& alpha, std::int64_t q_max);
}

}  // namespace qtorus
