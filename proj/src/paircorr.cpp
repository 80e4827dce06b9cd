#include "qtorus/paircorr.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "qtorus/errors.hpp"
#include "qtorus/quadrature.hpp"

namespace qtorus {

using std::numbers::pi;

std::string_view to_string(CorrKind kind) {
    switch (kind) {
        case CorrKind::windowed: return "windowed";
        case CorrKind::generalized: return "generalized";
        case CorrKind::smoothed: return "smoothed";
    }
    return "?";
}

std::string corr_csv_header() {
    return "kind,k,alpha_digest,x_or_lambda,params,value,theoretical_limit,pair_count,error_budget";
}

namespace {

std::string psi_params(const TestPsi& psi) {
    std::string out;
    for (const auto& t : psi.terms()) {
        if (!out.empty()) out += '+';
        out += format_real(t.c) + "*r^" + std::to_string(t.p) + "*exp(-pi*" + format_real(t.s) + "*r)";
    }
    return out.empty() ? "0" : out;
}

}  // namespace

std::string corr_csv_row(const CorrEstimate& est) {
    std::string params;
    if (est.window) params = "[" + format_real(est.window->a) + ";" + format_real(est.window->b) + "]";
    if (est.h) {
        params = "psi1=" + psi_params(*est.psi1) + " psi2=" + psi_params(*est.psi2) + " h=" +
                 std::string(to_string(est.h->shape())) + "(" + format_real(est.h->half_width()) + ";" +
                 format_real(est.h->amplitude()) + ")";
    }
    std::string row;
    row += to_string(est.kind);
    row += "," + std::to_string(est.k) + "," + est.alpha_digest + "," + format_real(est.x_or_lambda) + ",\"" +
           params + "\"," + format_real(est.value) + "," + format_real(est.theoretical_limit) + "," +
           std::to_string(est.pair_count) + "," + format_real(est.error_budget);
    return row;
}

// ---------------------------------------------------------------------------
// windowed

namespace {

constexpr std::size_t kSweepChunk = 1 << 15;

std::pair<std::size_t, std::size_t> index_range(std::span<const double> p, double lo, double hi) {
    auto first = std::lower_bound(p.begin(), p.end(), lo);
    auto last = std::upper_bound(first, p.end(), hi);
    return {static_cast<std::size_t>(first - p.begin()), static_cast<std::size_t>(last - p.begin())};
}

// Sweep rows [r0, r1) of the restricted array q. Pointer positions are
// initialized by bisection with the same predicates the sweep advances on,
// so any partition of rows gives the same counts.
std::int64_t sweep_rows(std::span<const double> q, std::size_t r0, std::size_t r1, Window w) {
    const std::size_t n = q.size();
    auto first_le_b = [&](std::size_t i) {  // first j with q_i - q_j <= b
        std::size_t lo = 0, hi = n;
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (q[i] - q[mid] <= w.b)
                hi = mid;
            else
                lo = mid + 1;
        }
        return lo;
    };
    auto first_lt_a = [&](std::size_t i) {  // first j with q_i - q_j < a
        std::size_t lo = 0, hi = n;
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (q[i] - q[mid] < w.a)
                hi = mid;
            else
                lo = mid + 1;
        }
        return lo;
    };
    if (r0 >= r1) return 0;
    std::size_t jb = first_le_b(r0), ja = first_lt_a(r0);
    std::int64_t count = 0;
    for (std::size_t i = r0; i < r1; ++i) {
        while (jb < n && !(q[i] - q[jb] <= w.b)) ++jb;
        while (ja < n && !(q[i] - q[ja] < w.a)) ++ja;
        if (ja > jb) {
            count += static_cast<std::int64_t>(ja - jb);
            if (i >= jb && i < ja) --count;
        }
    }
    return count;
}

}  // namespace

std::int64_t count_window_pairs(std::span<const double> points, double lo, double hi, Window w,
                                Parallelism par) {
    auto [s, e] = index_range(points, lo, hi);
    std::span<const double> q = points.subspan(s, e - s);
    const std::size_t chunks = chunk_count(q.size(), kSweepChunk);
    std::vector<std::int64_t> partial(chunks, 0);
    for_each_chunk(chunks, par, [&](std::size_t c) {
        partial[c] = sweep_rows(q, c * kSweepChunk, std::min(q.size(), (c + 1) * kSweepChunk), w);
    });
    std::int64_t total = 0;
    for (auto v : partial) total += v;
    return total;
}

namespace serial {
std::int64_t count_window_pairs(std::span<const double> points, double lo, double hi, Window w) {
    auto [s, e] = index_range(points, lo, hi);
    std::span<const double> q = points.subspan(s, e - s);
    return sweep_rows(q, 0, q.size(), w);
}
}  // namespace serial

std::int64_t count_window_pairs_naive(std::span<const double> points, double lo, double hi, Window w) {
    std::int64_t count = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(points[i] >= lo && points[i] <= hi)) continue;
        for (std::size_t j = 0; j < points.size(); ++j) {
            if (i == j || !(points[j] >= lo && points[j] <= hi)) continue;
            const double d = points[i] - points[j];
            if (d >= w.a && d <= w.b) ++count;
        }
    }
    return count;
}

std::size_t count_near_ties(std::span<const double> points, double lo, double hi, double tol) {
    auto [s, e] = index_range(points, lo, hi);
    std::size_t n = 0;
    for (std::size_t i = s + 1; i < e; ++i)
        if (points[i] - points[i - 1] < tol) ++n;
    return n;
}

double limit_windowed(int k, Window w) { return unit_ball_volume(k) * (w.b - w.a); }

CorrEstimate r2_windowed_points(std::span<const double> points, double X, Window w, double density,
                                Parallelism par) {
    if (!(X > 0.0)) throw InvalidArgument("r2_windowed: X must be positive");
    if (!(density > 0.0)) throw InvalidArgument("r2_windowed: density must be positive");
    CorrEstimate est;
    est.kind = CorrKind::windowed;
    est.x_or_lambda = X;
    est.window = w;
    est.pair_count = count_window_pairs(points, X, 2.0 * X, w, par);
    est.value = static_cast<double>(est.pair_count) / (density * X);
    est.theoretical_limit = density * (w.b - w.a);
    return est;
}

CorrEstimate r2_windowed(const SpectrumSlice& slice, double X, Window w, Parallelism par) {
    if (!(X > 0.0)) throw InvalidArgument("r2_windowed: X must be positive");
    if (2.0 * X > slice.rescaled_cutoff() * (1.0 + 1e-12))
        throw InsufficientData("r2_windowed: slice cutoff does not cover [X, 2X]");
    const int k = slice.spec.k();
    CorrEstimate est = r2_windowed_points(slice.rescaled, X, w, unit_ball_volume(k), par);
    est.k = k;
    est.alpha_digest = slice.spec.digest();
    est.theoretical_limit = limit_windowed(k, w);
    if (!slice.exact_keys) est.near_ties = count_near_ties(slice.rescaled, X, 2.0 * X);
    return est;
}

// ---------------------------------------------------------------------------
// smoothed

double psi_tail_mass(const TestPsi& psi, double x, int k) {
    double sum = 0.0;
    const double half = 0.5 * k;
    for (const auto& t : psi.terms()) {
        if (t.c == 0.0) continue;
        const double a = t.p + half;
        const double z = pi * t.s * std::max(x, 0.0);
        sum += std::fabs(t.c) * boost::math::tgamma(a, z) / std::pow(pi * t.s, a);
    }
    return half * sum;
}

double required_cutoff(const TestPsi& psi1, const TestPsi& psi2, double lambda, int k, double tol) {
    auto ok = [&](double x) { return psi_tail_mass(psi1, x, k) < tol && psi_tail_mass(psi2, x, k) < tol; };
    double hi = 1.0;
    while (!ok(hi)) hi *= 2.0;
    double lo = 0.0;
    while (hi - lo > 0.01 * hi) {
        double mid = 0.5 * (lo + hi);
        if (ok(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi * lambda;
}

double limit_smoothed(const TestPsi& psi1, const TestPsi& psi2, const WeightH& h, int k) {
    if (k < 2) throw InvalidArgument("limit_smoothed: k must be >= 2");
    const double term1 = 0.5 * k * h.hat(0.0) * psi_moment(psi1, psi2, 0.5 * k - 1.0);
    const double term2 = 0.25 * k * k * unit_ball_volume(k) * 2.0 * h.at_zero() * psi_moment(psi1, psi2, k - 2.0);
    return term1 + term2;
}

namespace {

constexpr std::size_t kRowChunk = 256;
constexpr double kNearX = 0.25;

// Per-point data for the symmetric double sum. x_i = c * lambda_i is the
// phase in the variable where h-hat takes its closed form.
struct SmoothedPrep {
    std::vector<double> lam, w1, w2, x, sn, cs, abs1_prefix, abs2_prefix;
    double c = 0.0;       // lambda^{k/2-1} * (pi a / 2 or pi a)
    double x_cut = 0.0;   // beyond: |hat| < hat_tol
    double env_cut = 0.0;
    double scale = 0.0;   // amplitude * half-width
    HShape shape = HShape::triangle;
    const WeightH* h = nullptr;
    double lambda_pow = 1.0;
};

double hat_from_x(const SmoothedPrep& P, double x, double s) {
    // x >= kNearX, s = sin x
    if (P.shape == HShape::triangle) {
        const double r = s / x;
        return P.scale * r * r;
    }
    if (std::fabs(x - pi) < 0.5) return P.h->hat(x / (pi * P.h->half_width()));
    return P.scale * pi * pi * s / (x * (pi * pi - x * x));
}

SmoothedPrep prepare(const SpectrumSlice& slice, const TestPsi& psi1, const TestPsi& psi2, const WeightH& h,
                     double lambda, double hat_tol) {
    SmoothedPrep P;
    const int k = slice.spec.k();
    const std::size_t n = slice.size();
    P.h = &h;
    P.shape = h.shape();
    P.scale = h.amplitude() * h.half_width();
    P.lambda_pow = std::pow(lambda, 0.5 * k - 1.0);
    const double kappa = (h.shape() == HShape::triangle ? 0.5 : 1.0) * pi * h.half_width();
    P.c = kappa * P.lambda_pow;
    // h-hat envelope in s; convert the cut to the x variable.
    double s_cut = 1.0;
    while (h.hat_envelope(s_cut) >= hat_tol && s_cut < 1e300) s_cut *= 2.0;
    double lo = 0.0;
    for (int it = 0; it < 200 && s_cut - lo > 1e-12 * s_cut; ++it) {
        double mid = 0.5 * (lo + s_cut);
        if (h.hat_envelope(mid) < hat_tol)
            s_cut = mid;
        else
            lo = mid;
    }
    P.x_cut = kappa * s_cut;
    P.env_cut = h.hat_envelope(s_cut);
    P.lam = slice.lambdas;
    P.w1.resize(n);
    P.w2.resize(n);
    P.x.resize(n);
    P.sn.resize(n);
    P.cs.resize(n);
    P.abs1_prefix.assign(n + 1, 0.0);
    P.abs2_prefix.assign(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = P.lam[i] / lambda;
        P.w1[i] = psi1(r);
        P.w2[i] = psi2(r);
        // c * lambda_i as an unevaluated sum hi + lo, so sin and cos carry
        // absolute accuracy ~1e-16 even where x_i is in the thousands.
        const double hi = P.c * P.lam[i];
        const double lo_part = std::fma(P.c, P.lam[i], -hi);
        const double sh = std::sin(hi), ch = std::cos(hi);
        P.x[i] = hi;
        P.sn[i] = sh + lo_part * ch;
        P.cs[i] = ch - lo_part * sh;
        P.abs1_prefix[i + 1] = P.abs1_prefix[i] + std::fabs(P.w1[i]);
        P.abs2_prefix[i + 1] = P.abs2_prefix[i] + std::fabs(P.w2[i]);
    }
    return P;
}

// Row i: diagonal term plus pairs j < i, both orders folded together.
double row_sum(const SmoothedPrep& P, std::size_t i, double& budget) {
    const double hat0 = P.h->hat(0.0);
    double sum = P.w1[i] * P.w2[i] * hat0;
    const double xi = P.x[i];
    // j in [jcut, jnear): far pairs via the sine subtraction formula;
    // [jnear, i): near pairs evaluated directly.
    const auto xb = P.x.begin();
    const std::size_t jcut = static_cast<std::size_t>(
        std::lower_bound(xb, xb + static_cast<std::ptrdiff_t>(i), xi - P.x_cut) - xb);
    const std::size_t jnear = static_cast<std::size_t>(
        std::upper_bound(xb + static_cast<std::ptrdiff_t>(jcut), xb + static_cast<std::ptrdiff_t>(i),
                         xi - kNearX) - xb);
    const double a1 = P.w1[i], a2 = P.w2[i];
    const double si = P.sn[i], ci = P.cs[i], li = P.lam[i];
    double far = 0.0;
    for (std::size_t j = jcut; j < jnear; ++j) {
        double x = P.c * (li - P.lam[j]);
        if (x < kNearX) {
            far += (a1 * P.w2[j] + P.w1[j] * a2) * P.h->hat(P.lambda_pow * (li - P.lam[j]));
            continue;
        }
        const double s = si * P.cs[j] - ci * P.sn[j];
        far += (a1 * P.w2[j] + P.w1[j] * a2) * hat_from_x(P, x, s);
    }
    double near = 0.0;
    for (std::size_t j = jnear; j < i; ++j)
        near += (a1 * P.w2[j] + P.w1[j] * a2) * P.h->hat(P.lambda_pow * (li - P.lam[j]));
    sum += far + near;
    if (jcut > 0) budget += P.env_cut * (std::fabs(a1) * P.abs2_prefix[jcut] + std::fabs(a2) * P.abs1_prefix[jcut]);
    return sum;
}

void check_smoothed_inputs(const SpectrumSlice& slice, const TestPsi& psi1, const TestPsi& psi2, double lambda,
                           double tail_tol) {
    if (!(lambda > 0.0)) throw InvalidArgument("r2_smoothed_direct: lambda must be positive");
    const int k = slice.spec.k();
    const double x = slice.cutoff / lambda;
    if (psi_tail_mass(psi1, x, k) >= tail_tol || psi_tail_mass(psi2, x, k) >= tail_tol)
        throw InsufficientData("r2_smoothed_direct: cutoff too small, need Lambda >= " +
                               format_real(required_cutoff(psi1, psi2, lambda, k, tail_tol)));
}

CorrEstimate smoothed_result(const SpectrumSlice& slice, const TestPsi& psi1, const TestPsi& psi2,
                             const WeightH& h, double lambda, double sum, double budget) {
    const int k = slice.spec.k();
    const double norm = unit_ball_volume(k) * std::pow(lambda, 0.5 * k);
    CorrEstimate est;
    est.kind = CorrKind::smoothed;
    est.k = k;
    est.alpha_digest = slice.spec.digest();
    est.x_or_lambda = lambda;
    est.psi1 = psi1;
    est.psi2 = psi2;
    est.h = h;
    est.value = sum / norm;
    // psi mass beyond the cutoff, paired against at most sup|h-hat| times the other mass
    const double x = slice.cutoff / lambda;
    const double tails = std::fabs(h.amplitude()) * h.half_width() *
                         (psi_tail_mass(psi1, x, k) * psi_tail_mass(psi2, 0.0, k) +
                          psi_tail_mass(psi2, x, k) * psi_tail_mass(psi1, 0.0, k));
    est.error_budget = budget / norm + tails;
    est.theoretical_limit = limit_smoothed(psi1, psi2, h, k);
    return est;
}

}  // namespace

CorrEstimate r2_smoothed_direct(const SpectrumSlice& slice, const TestPsi& psi1, const TestPsi& psi2,
                                const WeightH& h, double lambda, const SmoothedOptions& opts) {
    check_smoothed_inputs(slice, psi1, psi2, lambda, opts.tail_tol);
    const SmoothedPrep P = prepare(slice, psi1, psi2, h, lambda, opts.hat_tol);
    const std::size_t n = slice.size();
    const std::size_t chunks = chunk_count(n, kRowChunk);
    std::vector<double> sums(chunks, 0.0), budgets(chunks, 0.0);
    for_each_chunk(chunks, opts.par, [&](std::size_t c) {
        double s = 0.0, b = 0.0;
        for (std::size_t i = c * kRowChunk; i < std::min(n, (c + 1) * kRowChunk); ++i) s += row_sum(P, i, b);
        sums[c] = s;
        budgets[c] = b;
    });
    double sum = 0.0, budget = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) {
        sum += sums[c];
        budget += budgets[c];
    }
    return smoothed_result(slice, psi1, psi2, h, lambda, sum, budget);
}

namespace serial {
CorrEstimate r2_smoothed_direct(const SpectrumSlice& slice, const TestPsi& psi1, const TestPsi& psi2,
                                const WeightH& h, double lambda, const SmoothedOptions& opts) {
    check_smoothed_inputs(slice, psi1, psi2, lambda, opts.tail_tol);
    const SmoothedPrep P = prepare(slice, psi1, psi2, h, lambda, opts.hat_tol);
    double sum = 0.0, budget = 0.0;
    for (std::size_t i = 0; i < slice.size(); ++i) sum += row_sum(P, i, budget);
    return smoothed_result(slice, psi1, psi2, h, lambda, sum, budget);
}
}  // namespace serial

double r2_smoothed_naive(const SpectrumSlice& slice, const TestPsi& psi1, const TestPsi& psi2,
                         const WeightH& h, double lambda) {
    const int k = slice.spec.k();
    const double lp = std::pow(lambda, 0.5 * k - 1.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < slice.size(); ++i) {
        const double a = psi1(slice.lambdas[i] / lambda);
        for (std::size_t j = 0; j < slice.size(); ++j)
            sum += a * psi2(slice.lambdas[j] / lambda) * h.hat(lp * (slice.lambdas[i] - slice.lambdas[j]));
    }
    return sum / (unit_ball_volume(k) * std::pow(lambda, 0.5 * k));
}

// ---------------------------------------------------------------------------
// generalized

double rho_factor(double r1, double r2, int k) {
    if (!(r1 > 0.0) || !(r2 > 0.0)) throw InvalidArgument("rho_factor: arguments must be positive");
    if (k < 1) throw InvalidArgument("rho_factor: k must be positive");
    if (r1 == r2) return 0.5 * k * std::pow(r1, 0.5 * k - 1.0);
    double sum = 0.0;
    if (k % 2 == 0) {
        const int m = k / 2;
        for (int nu = 1; nu <= m; ++nu) sum += std::pow(r1, m - nu) * std::pow(r2, nu - 1);
        return sum;
    }
    const double q1 = std::sqrt(r1), q2 = std::sqrt(r2);
    for (int nu = 1; nu <= k; ++nu) sum += std::pow(q1, k - nu) * std::pow(q2, nu - 1);
    return sum / (q1 + q2);
}

CorrEstimate r2_generalized(const SpectrumSlice& slice, const GeneralizedKernel& kernel, double lambda) {
    if (!(lambda > 0.0)) throw InvalidArgument("r2_generalized: lambda must be positive");
    if (!(kernel.r_max > 0.0) || !(kernel.s_max >= 0.0))
        throw InvalidArgument("r2_generalized: kernel support must be positive");
    if (kernel.r_max * lambda > slice.cutoff * (1.0 + 1e-12))
        throw InsufficientData("r2_generalized: slice cutoff does not cover the kernel support");
    const int k = slice.spec.k();
    const double lp = std::pow(lambda, 0.5 * k - 1.0);
    const double dl = kernel.s_max / lp;
    const auto& L = slice.lambdas;
    const std::size_t n = static_cast<std::size_t>(
        std::upper_bound(L.begin(), L.end(), kernel.r_max * lambda) - L.begin());
    double sum = 0.0;
    std::size_t j0 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (j0 < n && L[j0] < L[i] - dl) ++j0;
        for (std::size_t j = j0; j < n && L[j] <= L[i] + dl; ++j)
            sum += kernel.psi(L[i] / lambda, L[j] / lambda, lp * (L[i] - L[j]));
    }
    CorrEstimate est;
    est.kind = CorrKind::generalized;
    est.k = k;
    est.alpha_digest = slice.spec.digest();
    est.x_or_lambda = lambda;
    est.value = sum / (unit_ball_volume(k) * std::pow(lambda, 0.5 * k));
    est.theoretical_limit = limit_generalized(kernel, k);
    return est;
}

double limit_generalized(const GeneralizedKernel& kernel, int k, double tol) {
    const double half = 0.5 * k;
    auto diag = integrate_adaptive(
        [&](double r) { return r > 0.0 ? kernel.psi(r, r, 0.0) * std::pow(r, half - 1.0) : 0.0; }, 0.0,
        kernel.r_max, tol);
    auto inner = [&](double r) {
        if (r <= 0.0 || kernel.s_max == 0.0) return 0.0;
        auto s_int = integrate_adaptive([&](double s) { return kernel.psi(r, r, s); }, -kernel.s_max,
                                        kernel.s_max, tol);
        return s_int.value * std::pow(r, k - 2.0);
    };
    auto off = integrate_adaptive(inner, 0.0, kernel.r_max, tol);
    return half * diag.value + 0.25 * k * k * unit_ball_volume(k) * off.value;
}

}  // namespace qtorus
