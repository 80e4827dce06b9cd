#include "qtorus/equidist.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qtorus/errors.hpp"
#include "qtorus/lattice.hpp"
#include "qtorus/paircorr.hpp"
#include "qtorus/quadrature.hpp"

namespace qtorus {

using std::numbers::pi;

std::string_view to_string(ProbeTarget t) {
    switch (t) {
        case ProbeTarget::constant: return "constant";
        case ProbeTarget::theta_pair: return "theta-pair";
        case ProbeTarget::dominating: return "dominating";
    }
    return "?";
}

ProbeTarget parse_probe_target(std::string_view name) {
    if (name == "constant") return ProbeTarget::constant;
    if (name == "theta-pair" || name == "theta_pair") return ProbeTarget::theta_pair;
    if (name == "dominating" || name == "F_R") return ProbeTarget::dominating;
    throw InvalidArgument("unknown probe target '" + std::string(name) + "'");
}

HorocycleProbe::HorocycleProbe(double v_, double sigma_, WeightH h_, ProbeTarget t)
    : v(v_), sigma(sigma_), h(h_), target(t) {
    if (!(v > 0.0)) throw InvalidArgument("horocycle probe: v must be positive");
    if (!(sigma >= 0.0)) throw InvalidArgument("horocycle probe: sigma must be >= 0");
}

double theta_pair_limit(const TestPsi& psi1, const TestPsi& psi2, const WeightH& h, int k) {
    return unit_ball_volume(k) * limit_smoothed(psi1, psi2, h, k);
}

DominatingFn::DominatingFn(double R_, TestPsi f_, int k_, double beta_)
    : R(R_), beta(beta_ < 0.0 ? 0.5 * k_ : beta_), f(std::move(f_)), k(k_) {
    if (!(R > 1.0)) throw InvalidArgument("dominating function: R must exceed 1");
    if (k < 1) throw InvalidArgument("dominating function: k must be positive");
}

namespace {

// sum_m psi(|y + m|^2 w), y reduced mod 1 first.
double lattice_sum(const TestPsi& psi, std::vector<double> y, double w, double tol) {
    for (double& c : y) c = -(c - std::floor(c));
    const double bound = psi.radius_below(tol) / w;
    double sum = 0.0;
    const SlabRange r = outer_slabs(y[0], bound);
    for (std::int64_t m0 = r.first; m0 <= r.last; ++m0)
        enumerate_ball_slab(y, bound, m0, [&](const std::int64_t*, double d2) { sum += psi(d2 * w); });
    return sum;
}

double coset_term(const DominatingFn& dom, const Coset& cs, cplx tau, const std::vector<double>& xi) {
    const int k = dom.k;
    const double cu = cs.c * tau.real() + cs.d;
    const double cv = cs.c * tau.imag();
    const double vg = tau.imag() / (cu * cu + cv * cv);
    std::vector<double> yg(k);
    for (int j = 0; j < k; ++j) yg[j] = cs.c * xi[j] + cs.d * xi[k + j];
    return lattice_sum(dom.f, yg, vg, dom.tol) * std::pow(vg, dom.beta);
}

void check_xi(const DominatingFn& dom, const std::vector<double>& xi) {
    if (static_cast<int>(xi.size()) != 2 * dom.k) throw InvalidArgument("dominating function: xi must have 2k entries");
}

}  // namespace

std::vector<Coset> reaching_cosets(double u, double v, double R) {
    if (!(v > 0.0)) throw InvalidArgument("reaching_cosets: v must be positive");
    std::vector<Coset> out;
    if (v >= R) {
        out.push_back({0, 1});
        out.push_back({0, -1});
    }
    const double target = v / R;
    for (std::int64_t c = 1; static_cast<double>(c * c) * v * v <= target; ++c) {
        const double cd = static_cast<double>(c);
        const double r = std::sqrt(target - cd * cd * v * v);
        const auto d_lo = static_cast<std::int64_t>(std::ceil(-cd * u - r)) - 1;
        const auto d_hi = static_cast<std::int64_t>(std::floor(-cd * u + r)) + 1;
        for (std::int64_t d = d_lo; d <= d_hi; ++d) {
            if (gcd64(c, d) != 1) continue;
            const double x = cd * u + static_cast<double>(d);
            if (v / (x * x + cd * cd * v * v) < R) continue;
            out.push_back({c, d});
            out.push_back({-c, -d});
        }
    }
    return out;
}

double dominating_fn_eval(const DominatingFn& dom, cplx tau, const std::vector<double>& xi) {
    check_xi(dom, xi);
    double sum = 0.0;
    for (const auto& cs : reaching_cosets(tau.real(), tau.imag(), dom.R)) sum += coset_term(dom, cs, tau, xi);
    return sum;
}

double dominating_fn_eval_fundamental(const DominatingFn& dom, cplx tau, const std::vector<double>& xi) {
    check_xi(dom, xi);
    const double v = tau.imag();
    if (v < dom.R) return 0.0;
    std::vector<double> y(xi.begin() + dom.k, xi.end()), ny(y);
    for (double& c : ny) c = -c;
    return (lattice_sum(dom.f, y, v, dom.tol) + lattice_sum(dom.f, ny, v, dom.tol)) * std::pow(v, dom.beta);
}

int cusp_indicator(cplx tau, double R) {
    return static_cast<int>(reaching_cosets(tau.real(), tau.imag(), R).size() / 2);
}

double l1_mean_dominating(const DominatingFn& dom) {
    const double e = 0.5 * dom.k + 1.0 - dom.beta;
    if (!(e > 0.0)) throw InvalidArgument("l1_mean_dominating: beta >= k/2 + 1 gives an infinite mean");
    return 2.0 * pi * std::pow(dom.R, -e) / e * psi_integral_rk(dom.f, dom.k);
}

MonteCarloResult l1_mean_monte_carlo(const DominatingFn& dom, std::size_t samples, std::uint64_t seed,
                                     Parallelism par) {
    if (samples < 2) throw InvalidArgument("l1_mean_monte_carlo: need at least 2 samples");
    constexpr std::size_t kChunk = 4096;
    const std::size_t chunks = chunk_count(samples, kChunk);
    std::vector<double> s1(chunks, 0.0), s2(chunks, 0.0);
    for_each_chunk(chunks, par, [&](std::size_t c) {
        std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (c + 1)));
        std::uniform_real_distribution<double> U(0.0, 1.0);
        const std::size_t n = std::min(kChunk, samples - c * kChunk);
        std::vector<double> xi(2 * dom.k);
        double a = 0.0, b = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = U(rng) - 0.5;
            const double v = dom.R / (1.0 - U(rng));
            for (double& x : xi) x = U(rng);
            // phi integrates to pi; the v density R / v^2 carries the Haar weight 1 / v^2.
            const double g = pi / dom.R * dominating_fn_eval(dom, {u, v}, xi);
            a += g;
            b += g * g;
        }
        s1[c] = a;
        s2[c] = b;
    });
    double a = 0.0, b = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) {
        a += s1[c];
        b += s2[c];
    }
    const double n = static_cast<double>(samples);
    MonteCarloResult r;
    r.samples = samples;
    r.mean = a / n;
    r.std_error = std::sqrt(std::max(0.0, b / n - r.mean * r.mean) / (n - 1.0));
    return r;
}

// ---------------------------------------------------------------------------
// block sums

namespace {

// Signed distance of d * alpha_j to the nearest integer.
double frac_distance(const PreciseReal& a, std::int64_t d) {
    if (a.exact) {
        const auto den = a.exact->den;
        auto r = static_cast<std::int64_t>((static_cast<__int128>(d) * a.exact->num) % den);
        if (2 * r > den) r -= den;
        return static_cast<double>(r) / static_cast<double>(den);
    }
    const double dd = static_cast<double>(d);
    const double p = dd * a.hi;
    const double err = std::fma(dd, a.hi, -p);
    double t = p - std::nearbyint(p);
    t += err + dd * a.lo;
    return t - std::nearbyint(t);
}

double block_term(const PreciseVector& alpha, std::int64_t d, double T2, double rho2, const TestPsi& psi,
                  std::vector<double>& centre) {
    const std::size_t k = alpha.size();
    if (rho2 < 0.25) {
        // Only the nearest lattice point can lie within the truncation radius.
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double t = frac_distance(alpha[j], d);
            s += t * t;
        }
        return s <= rho2 ? psi(T2 * s) : 0.0;
    }
    for (std::size_t j = 0; j < k; ++j) centre[j] = -frac_distance(alpha[j], d);
    double sum = 0.0;
    const SlabRange r = outer_slabs(centre[0], rho2);
    for (std::int64_t m0 = r.first; m0 <= r.last; ++m0)
        enumerate_ball_slab(centre, rho2, m0, [&](const std::int64_t*, double d2) { sum += psi(T2 * d2); });
    return sum;
}

void check_block(const PreciseVector& alpha, std::int64_t D, double T) {
    if (alpha.empty()) throw InvalidArgument("block_sum: empty alpha");
    if (D < 1) throw InvalidArgument("block_sum: D must be >= 1");
    if (!(T > 1.0)) throw InvalidArgument("block_sum: T must exceed 1");
}

}  // namespace

double block_sum(const PreciseVector& alpha, std::int64_t D, double T, const TestPsi& psi, Parallelism par,
                 double tol) {
    check_block(alpha, D, T);
    constexpr std::int64_t kChunk = 1 << 16;
    const double T2 = T * T;
    const double rho2 = psi.radius_below(tol) / T2;
    const std::size_t chunks = chunk_count(static_cast<std::size_t>(D), kChunk);
    std::vector<double> part(chunks, 0.0);
    for_each_chunk(chunks, par, [&](std::size_t c) {
        std::vector<double> centre(alpha.size());
        const std::int64_t d0 = 1 + static_cast<std::int64_t>(c) * kChunk;
        const std::int64_t d1 = std::min<std::int64_t>(D, d0 + kChunk - 1);
        double s = 0.0;
        for (std::int64_t d = d0; d <= d1; ++d) s += block_term(alpha, d, T2, rho2, psi, centre);
        part[c] = s;
    });
    double sum = 0.0;
    for (double x : part) sum += x;
    return sum;
}

namespace serial {
double block_sum(const PreciseVector& alpha, std::int64_t D, double T, const TestPsi& psi, double tol) {
    check_block(alpha, D, T);
    const double T2 = T * T;
    const double bound = psi.radius_below(tol) / T2;
    std::vector<double> centre(alpha.size());
    double sum = 0.0;
    for (std::int64_t d = 1; d <= D; ++d) {
        for (std::size_t j = 0; j < alpha.size(); ++j) centre[j] = -frac_distance(alpha[j], d);
        const SlabRange r = outer_slabs(centre[0], bound);
        for (std::int64_t m0 = r.first; m0 <= r.last; ++m0)
            enumerate_ball_slab(centre, bound, m0, [&](const std::int64_t*, double d2) { sum += psi(T2 * d2); });
    }
    return sum;
}
}  // namespace serial

// ---------------------------------------------------------------------------
// F_R along the horocycle

namespace {

// v^sigma int_{|u| >= u_min} F_R(u + iv; (0, alpha)) h(v^sigma u) du.
double dominating_line(const DominatingFn& dom, const std::vector<double>& alpha, const WeightH& h, double v,
                       double sigma, double u_min, double abs_tol) {
    if (static_cast<int>(alpha.size()) != dom.k) throw InvalidArgument("dominating line: alpha has wrong length");
    const double scale = std::pow(v, sigma);
    const double U = h.half_width() / scale;
    if (u_min >= U) return 0.0;
    double total = 0.0;
    // c = 0: constant in u.
    if (v >= dom.R) {
        std::vector<double> ny(alpha);
        for (double& c : ny) c = -c;
        const double level =
            (lattice_sum(dom.f, alpha, v, dom.tol) + lattice_sum(dom.f, ny, v, dom.tol)) * std::pow(v, dom.beta);
        auto hh = [&](double u) { return h(scale * u) * scale; };
        total += level * 2.0 * integrate_panels(hh, u_min, U, 64);
    }
    const double target = v / dom.R;
    std::vector<double> yg(dom.k);
    for (std::int64_t c = 1; static_cast<double>(c * c) * v * v <= target; ++c) {
        const double cd = static_cast<double>(c);
        const double r = std::sqrt(target - cd * cd * v * v);
        const auto d_lo = static_cast<std::int64_t>(std::floor(-cd * U - r)) - 1;
        const auto d_hi = static_cast<std::int64_t>(std::ceil(cd * U + r)) + 1;
        for (std::int64_t d = d_lo; d <= d_hi; ++d) {
            if (gcd64(c, d) != 1) continue;
            for (int j = 0; j < dom.k; ++j) yg[j] = static_cast<double>(d) * alpha[j];
            auto F = [&](double u) {
                const double x = cd * u + static_cast<double>(d);
                const double vg = v / (x * x + cd * cd * v * v);
                if (vg < dom.R) return 0.0;
                return 2.0 * lattice_sum(dom.f, yg, vg, dom.tol) * std::pow(vg, dom.beta) * h(scale * u) * scale;
            };
            const double a = (-static_cast<double>(d) - r) / cd, b = (-static_cast<double>(d) + r) / cd;
            // pieces of [a, b] inside u_min <= |u| <= U, split at 0 where h has a kink
            const double cuts[][2] = {{std::max(a, -U), std::min(b, -u_min)}, {std::max(a, u_min), std::min(b, U)}};
            for (const auto& piece : cuts) {
                double lo = piece[0], hi = piece[1];
                if (hi <= lo) continue;
                if (lo < 0.0 && hi > 0.0) {
                    total += integrate_adaptive(F, lo, 0.0, abs_tol).value + integrate_adaptive(F, 0.0, hi, abs_tol).value;
                } else {
                    total += integrate_adaptive(F, lo, hi, abs_tol).value;
                }
            }
        }
    }
    return total;
}

}  // namespace

double cusp_contribution(const DominatingFn& dom, const std::vector<double>& alpha, const WeightH& h, double v,
                         double eps, double abs_tol) {
    if (!(v > 0.0)) throw InvalidArgument("cusp_contribution: v must be positive");
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("cusp_contribution: eps must lie in (0, 1)");
    return dominating_line(dom, alpha, h, v, 0.5 * dom.k - 1.0, std::pow(v, 1.0 - eps), abs_tol);
}

CuspExponents cusp_exponents(double kappa, int k) {
    if (!(kappa > 1.0)) throw InvalidArgument("cusp_exponents: kappa must exceed 1");
    CuspExponents e;
    e.eps = 0.5;
    e.eps_prime = std::min(0.9 / (kappa - 1.0), 0.9 * (k - 2) + 0.05);
    e.bound_exponent = std::min(0.5 * (1.0 / (kappa - 1.0) - k + 2.0), 0.5 * e.eps_prime);
    return e;
}

// ---------------------------------------------------------------------------
// horocycle averages

HorocycleResult horocycle_average(const HorocycleProbe& probe, const TorusSpec& spec, const TestPsi& psi1,
                                  const TestPsi& psi2, const EquidistOptions& opts) {
    if (!(probe.v > 0.0)) throw InvalidArgument("horocycle_average: v must be positive");
    if (!(probe.sigma >= 0.0)) throw InvalidArgument("horocycle_average: sigma must be >= 0");
    const int k = spec.k();
    const WeightH& h = probe.h;
    HorocycleResult r;
    switch (probe.target) {
        case ProbeTarget::constant: {
            // v^sigma int h(v^sigma u) du over the support, panels aligned at 0.
            const double scale = std::pow(probe.v, probe.sigma);
            const double U = h.half_width() / scale;
            auto hh = [&](double u) { return h(scale * u) * scale; };
            r.value = 2.0 * integrate_panels(hh, 0.0, U, 64);
            r.limit = h.integral();
            break;
        }
        case ProbeTarget::theta_pair: {
            SpectrumOptions so;
            so.memory_budget = opts.theta.memory_budget;
            so.par = opts.theta.par;
            const auto slice = enumerate_spectrum(spec, theta_cutoff(psi1, psi2, probe.v, opts.theta.tol), so);
            const auto t = horocycle_theta_integral(slice, psi1, psi2, h, probe.v, probe.sigma, opts.theta);
            r.value = t.value;
            r.error_estimate = t.error_estimate + t.truncation_error;
            r.limit = theta_pair_limit(psi1, psi2, h, k);
            break;
        }
        case ProbeTarget::dominating: {
            const DominatingFn dom(probe.R, psi1, k, probe.beta);
            r.value = dominating_line(dom, spec.alpha(), h, probe.v, probe.sigma, 0.0, opts.abs_tol);
            // mu(Gamma \ G^k) = (pi / 3) * pi with phi in [0, pi)
            r.limit = l1_mean_dominating(dom) / (pi * pi / 3.0) * h.integral();
            break;
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// sandwich

GroupPoint sample_fundamental(std::mt19937_64& rng, int k, double v_lo, double v_hi) {
    if (!(v_lo > 0.0 && v_hi > v_lo)) throw InvalidArgument("sample_fundamental: need 0 < v_lo < v_hi");
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (;;) {
        const double u = U(rng) - 0.5;
        const double v = 1.0 / (1.0 / v_lo - U(rng) * (1.0 / v_lo - 1.0 / v_hi));
        const double phi = pi * U(rng);
        std::vector<double> xi(2 * k);
        for (double& x : xi) x = U(rng) - 0.5;
        if (u * u + v * v <= 1.0) continue;
        return GroupPoint(u, v, phi, std::move(xi));
    }
}

SandwichReport sandwich_check(const TestPsi& f, const TestPsi& g, const DominatingFn& dom, double L,
                              std::size_t points, std::uint64_t seed) {
    SandwichReport rep;
    rep.points = points;
    rep.L = L;
    rep.max_violation = -std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < points; ++i) {
        const GroupPoint p = sample_fundamental(rng, dom.k, 0.8, 40.0);
        const int X = cusp_indicator(p.tau(), dom.R);
        std::vector<double> xi2(p.xi);
        for (double& x : xi2) x *= 2.0;
        const double fhat = dominating_fn_eval(dom, p.tau(), xi2);
        double lhs = 0.0;
        if (X > 0) {
            ++rep.cusp_points;
            lhs = std::abs(theta_pair(f, g, p)) * X;
        }
        rep.max_violation = std::max(rep.max_violation, lhs - fhat);
    }
    rep.holds = rep.max_violation <= L;
    return rep;
}

std::string equidist_csv_header() { return "v,value,limit,R,regime"; }

std::string equidist_csv_row(double v, double value, double limit, double R, const std::string& regime) {
    return format_real(v) + "," + format_real(value) + "," + format_real(limit) + "," + format_real(R) + "," + regime;
}

}  // namespace qtorus
