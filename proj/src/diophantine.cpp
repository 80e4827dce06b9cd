#include "qtorus/diophantine.hpp"

#include <cmath>
#include <limits>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "qtorus/errors.hpp"

namespace qtorus {

namespace mp = boost::multiprecision;
using big = mp::cpp_bin_float_100;

namespace {

PreciseReal from_big(big x) {
    x -= mp::floor(x);
    PreciseReal r;
    r.hi = static_cast<double>(x);
    r.lo = static_cast<double>(big(x - big(r.hi)));
    if (r.hi >= 1.0) {
        r.hi = 0.0;
        r.lo = 0.0;
    }
    return r;
}

}  // namespace

PreciseReal precise_from_double(double x) {
    PreciseReal r;
    r.hi = reduce_mod1(x);
    return r;
}

PreciseReal precise_from_rational(Rational r) {
    Rational rr = reduce_mod1(Rational::make(r.num, r.den));
    PreciseReal out = from_big(big(rr.num) / big(rr.den));
    out.exact = rr;
    return out;
}

PreciseReal parse_precise(std::string_view decimal) {
    std::string s(decimal);
    if (s.empty()) throw InvalidArgument("empty decimal");
    for (char ch : s)
        if (!(std::isdigit(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-' || ch == '+' || ch == 'e' ||
              ch == 'E'))
            throw InvalidArgument("malformed decimal '" + s + "'");
    try {
        return from_big(big(s));
    } catch (const std::exception&) {
        throw InvalidArgument("malformed decimal '" + s + "'");
    }
}

PreciseVector to_precise(std::span<const double> alpha) {
    PreciseVector out;
    for (double a : alpha) out.push_back(precise_from_double(a));
    return out;
}

std::vector<double> to_doubles(const PreciseVector& alpha) {
    std::vector<double> out;
    for (const auto& a : alpha) out.push_back(a.hi);
    return out;
}

TorusSpec to_spec(const PreciseVector& alpha) {
    std::vector<double> a;
    std::vector<std::optional<Rational>> ex;
    for (const auto& c : alpha) {
        a.push_back(c.hi);
        ex.push_back(c.exact);
    }
    return TorusSpec(std::move(a), std::move(ex));
}

bool is_perfect_power(std::int64_t n) {
    if (n < 4) return false;
    for (int e = 2; e < 63; ++e) {
        auto c = static_cast<std::int64_t>(std::llround(std::pow(static_cast<double>(n), 1.0 / e)));
        for (std::int64_t cand = std::max<std::int64_t>(2, c - 1); cand <= c + 1; ++cand) {
            std::int64_t p = 1;
            bool overflow = false;
            for (int i = 0; i < e && !overflow; ++i) overflow = __builtin_mul_overflow(p, cand, &p);
            if (!overflow && p == n) return true;
        }
        if (c < 2) break;
    }
    return false;
}

PreciseVector algebraic_vector(int k, int base) {
    if (k < 1) throw InvalidArgument("algebraic_vector: k must be positive");
    if (base < 2) throw InvalidArgument("algebraic_vector: base must be >= 2");
    if (is_perfect_power(base)) throw InvalidArgument("algebraic_vector: base must not be a perfect power");
    const big theta = mp::pow(big(base), big(1) / big(k + 1));
    PreciseVector out;
    big p = 1;
    for (int j = 1; j <= k; ++j) {
        p *= theta;
        out.push_back(from_big(p));
    }
    return out;
}

PreciseVector critical_vector(int k, Rational r1, Rational r2, int base) {
    if (k < 3) throw InvalidArgument("critical_vector: k must be >= 3");
    PreciseVector out = algebraic_vector(k - 2, base);
    out.push_back(precise_from_rational(r1));
    out.push_back(precise_from_rational(r2));
    return out;
}

double approximation_error(const PreciseVector& alpha, std::int64_t q) {
    double worst = 0.0;
    const double qd = static_cast<double>(q);
    for (const auto& a : alpha) {
        double dist;
        if (a.exact) {
            const auto r = static_cast<std::int64_t>((static_cast<__int128>(q) * a.exact->num) % a.exact->den);
            dist = static_cast<double>(std::min(r, a.exact->den - r)) / static_cast<double>(a.exact->den);
        } else {
            // q * hi split exactly into p + err; fractional part carried in t.
            const double p = qd * a.hi;
            const double err = std::fma(qd, a.hi, -p);
            double t = p - std::nearbyint(p);
            t += err + qd * a.lo;
            t -= std::nearbyint(t);
            dist = std::fabs(t);
        }
        worst = std::max(worst, dist);
    }
    return worst;
}

namespace {

constexpr std::int64_t kScanChunk = 1 << 16;

DiophReport summarize(const PreciseVector& alpha, std::int64_t q_max, const std::vector<double>& e) {
    DiophReport r;
    r.alpha = alpha;
    r.q_max = q_max;
    const int k = static_cast<int>(alpha.size());
    double best = std::numeric_limits<double>::infinity();
    double sup_ratio = 0.0;
    for (std::int64_t q = 1; q <= q_max; ++q) {
        const double eq = e[q];
        if (eq == 0.0 && !r.rational_flag) {
            r.rational_flag = true;
            r.rational_q = q;
        }
        if (eq < best) {
            best = eq;
            r.worst_q = q;
            r.records.emplace_back(q, eq);
        }
        if (q >= 2 && eq > 0.0) sup_ratio = std::max(sup_ratio, std::log(1.0 / eq) / std::log(static_cast<double>(q)));
    }
    r.worst_error = best;
    r.kappa_sup = 1.0 + sup_ratio;
    const double N = std::floor(std::pow(static_cast<double>(q_max), 1.0 / k) + 1e-9);
    r.dirichlet_bound = 1.0 / std::max(1.0, N);
    if (r.rational_flag) {
        r.kappa_hat = std::numeric_limits<double>::infinity();
        r.c_hat = 0.0;
        return r;
    }
    r.kappa_hat = 1.0 + std::log(1.0 / best) / std::log(static_cast<double>(q_max));
    double c = std::numeric_limits<double>::infinity();
    for (std::int64_t q = 1; q <= q_max; ++q)
        c = std::min(c, e[q] * std::pow(static_cast<double>(q), r.kappa_hat - 1.0));
    r.c_hat = c;
    return r;
}

void check_scan(const PreciseVector& alpha, std::int64_t q_max) {
    if (alpha.empty()) throw InvalidArgument("estimate_type: empty vector");
    if (q_max < 2) throw InvalidArgument("estimate_type: Q_max must be >= 2");
    if (q_max > 100'000'000) throw ResourceExhausted("estimate_type: Q_max above 1e8");
}

}  // namespace

std::vector<double> approximation_trace(const PreciseVector& alpha, std::int64_t q_max, Parallelism par) {
    check_scan(alpha, q_max);
    std::vector<double> e(static_cast<std::size_t>(q_max) + 1, 0.0);
    const auto chunks = chunk_count(static_cast<std::size_t>(q_max), kScanChunk);
    for_each_chunk(chunks, par, [&](std::size_t c) {
        const std::int64_t q0 = 1 + static_cast<std::int64_t>(c) * kScanChunk;
        const std::int64_t q1 = std::min<std::int64_t>(q_max, q0 + kScanChunk - 1);
        for (std::int64_t q = q0; q <= q1; ++q) e[q] = approximation_error(alpha, q);
    });
    return e;
}

DiophReport estimate_type(const PreciseVector& alpha, std::int64_t q_max, Parallelism par) {
    return summarize(alpha, q_max, approximation_trace(alpha, q_max, par));
}

namespace serial {
DiophReport estimate_type(const PreciseVector& alpha, std::int64_t q_max) {
    check_scan(alpha, q_max);
    std::vector<double> e(static_cast<std::size_t>(q_max) + 1, 0.0);
    for (std::int64_t q = 1; q <= q_max; ++q) e[q] = approximation_error(alpha, q);
    return summarize(alpha, q_max, e);
}
}  // namespace serial

std::string dioph_csv_header() { return "q,e_q,kappa_hat,kappa_sup,q_max"; }

std::vector<std::string> dioph_csv_rows(const DiophReport& report) {
    std::vector<std::string> rows;
    for (const auto& [q, e] : report.records)
        rows.push_back(std::to_string(q) + "," + format_real(e) + "," + format_real(report.kappa_hat) + "," +
                       format_real(report.kappa_sup) + "," + std::to_string(report.q_max));
    return rows;
}

}  // namespace qtorus
