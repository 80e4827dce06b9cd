#include "qtorus/theta.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qtorus/errors.hpp"
#include "qtorus/lattice.hpp"
#include "qtorus/quadrature.hpp"

namespace qtorus {

using std::numbers::pi;

cplx expi2pi(double z) {
    const double t = z - std::nearbyint(z);
    return {std::cos(2.0 * pi * t), std::sin(2.0 * pi * t)};
}

namespace {

// frac(a * u) with the rounding error of the product folded back in.
inline double product_frac(double a, double u) {
    const double p = a * u;
    const double err = std::fma(a, u, -p);
    double t = p - std::nearbyint(p);
    t += err;
    return t - std::nearbyint(t);
}

double wrap_angle(double phi) {
    double r = std::fmod(phi, 2.0 * pi);
    if (r < 0.0) r += 2.0 * pi;
    if (r >= 2.0 * pi) r = 0.0;
    return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// group

GroupPoint::GroupPoint(double u_, double v_, double phi_, std::vector<double> xi_)
    : u(u_), v(v_), phi(phi_), xi(std::move(xi_)) {
    if (!(v > 0.0) || !std::isfinite(v) || !std::isfinite(u)) throw InvalidArgument("group point needs v > 0");
    if (xi.size() < 4 || xi.size() % 2 != 0) throw InvalidArgument("group point needs xi in R^{2k}, k >= 2");
}

Mat2 operator*(const Mat2& m, const Mat2& n) {
    return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d, m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d};
}

GroupElement to_matrix_form(const GroupPoint& g) {
    const double sv = std::sqrt(g.v), cs = std::cos(g.phi), sn = std::sin(g.phi);
    Mat2 m{sv * cs + g.u / sv * sn, -sv * sn + g.u / sv * cs, sn / sv, cs / sv};
    return {m, g.xi};
}

GroupPoint from_matrix_form(const GroupElement& e) {
    const Mat2& m = e.m;
    const double den = m.c * m.c + m.d * m.d;
    GroupPoint g;
    g.v = 1.0 / den;
    g.u = (m.a * m.c + m.b * m.d) / den;
    g.phi = wrap_angle(std::atan2(m.c, m.d));
    g.xi = e.xi;
    return g;
}

GroupElement multiply(const GroupElement& a, const GroupElement& b) {
    if (a.xi.size() != b.xi.size()) throw InvalidArgument("group elements of different dimension");
    const std::size_t k = a.xi.size() / 2;
    GroupElement out{a.m * b.m, a.xi};
    for (std::size_t j = 0; j < k; ++j) {
        out.xi[j] += a.m.a * b.xi[j] + a.m.b * b.xi[k + j];
        out.xi[k + j] += a.m.c * b.xi[j] + a.m.d * b.xi[k + j];
    }
    return out;
}

GroupElement inverse(const GroupElement& e) {
    const Mat2 inv{e.m.d, -e.m.b, -e.m.c, e.m.a};
    const std::size_t k = e.xi.size() / 2;
    GroupElement out{inv, std::vector<double>(e.xi.size())};
    for (std::size_t j = 0; j < k; ++j) {
        out.xi[j] = -(inv.a * e.xi[j] + inv.b * e.xi[k + j]);
        out.xi[k + j] = -(inv.c * e.xi[j] + inv.d * e.xi[k + j]);
    }
    return out;
}

GroupPoint group_identity(int k) { return GroupPoint(0.0, 1.0, 0.0, std::vector<double>(2 * k, 0.0)); }

GroupPoint group_mul(const GroupPoint& g, const GroupPoint& h) {
    return from_matrix_form(multiply(to_matrix_form(g), to_matrix_form(h)));
}

GroupPoint act(const GroupElement& gamma, const GroupPoint& g) {
    return from_matrix_form(multiply(gamma, to_matrix_form(g)));
}

GroupElement generator_S(int k) { return {Mat2{0, -1, 1, 0}, std::vector<double>(2 * k, 0.0)}; }

GroupElement generator_T(int k, std::int64_t n, bool shifted) {
    GroupElement e{Mat2{1, static_cast<double>(n), 0, 1}, std::vector<double>(2 * k, 0.0)};
    if (shifted)
        for (int j = 0; j < k; ++j) e.xi[j] = 0.5 * static_cast<double>(n);
    return e;
}

GroupElement generator_lattice(const std::vector<std::int64_t>& m) {
    GroupElement e{Mat2{}, std::vector<double>(m.size())};
    for (std::size_t j = 0; j < m.size(); ++j) e.xi[j] = static_cast<double>(m[j]);
    return e;
}

GroupElement ReductionToken::element(int k) const {
    switch (kind) {
        case TokenKind::S: return generator_S(k);
        case TokenKind::T: return generator_T(k, power, true);
        case TokenKind::Lattice: return generator_lattice(shift);
    }
    return generator_S(k);
}

GroupPoint ReductionWord::replay() const {
    GroupPoint g = reduced;
    const int k = g.k();
    for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) g = act(inverse(it->element(k)), g);
    return g;
}

namespace {

// Direct coordinate updates; they agree with act() but lose less precision.
void apply_T(GroupPoint& g, std::int64_t n) {
    const int k = g.k();
    const double nd = static_cast<double>(n);
    g.u += nd;
    for (int j = 0; j < k; ++j) g.xi[j] += nd * g.xi[k + j] + 0.5 * nd;
}

void apply_S(GroupPoint& g) {
    const int k = g.k();
    const double r2 = g.u * g.u + g.v * g.v;
    const double arg = std::atan2(g.v, g.u);
    g.u = -g.u / r2;
    g.v = g.v / r2;
    g.phi = wrap_angle(g.phi + arg);
    for (int j = 0; j < k; ++j) {
        const double x = g.xi[j], y = g.xi[k + j];
        g.xi[j] = -y;
        g.xi[k + j] = x;
    }
}

}  // namespace

ReductionWord reduce_to_fundamental(const GroupPoint& g0) {
    if (!(g0.v >= 1e-300) || !std::isfinite(g0.v) || !std::isfinite(g0.u) || !std::isfinite(g0.phi))
        throw InvalidArgument("reduce_to_fundamental: v below 1e-300 or non-finite point");
    for (double c : g0.xi)
        if (!std::isfinite(c)) throw InvalidArgument("reduce_to_fundamental: non-finite xi");
    ReductionWord w;
    GroupPoint g = g0;
    g.phi = wrap_angle(g.phi);
    for (int iter = 0;; ++iter) {
        if (iter > 100000) throw ResourceExhausted("reduce_to_fundamental: no convergence");
        const double fl = std::floor(g.u + 0.5);
        if (std::fabs(fl) > 9e15) throw InvalidArgument("reduce_to_fundamental: u out of range");
        const auto n = -static_cast<std::int64_t>(fl);
        if (n != 0) {
            apply_T(g, n);
            w.tokens.push_back({TokenKind::T, n, {}});
        }
        if (g.u * g.u + g.v * g.v < 1.0) {
            apply_S(g);
            w.tokens.push_back({TokenKind::S, 0, {}});
            continue;
        }
        break;
    }
    if (g.phi >= pi) {  // -I = S^2
        apply_S(g);
        apply_S(g);
        w.tokens.push_back({TokenKind::S, 0, {}});
        w.tokens.push_back({TokenKind::S, 0, {}});
        g.phi = g.phi >= pi ? g.phi - pi : g.phi;
    }
    std::vector<std::int64_t> shift(g.xi.size(), 0);
    bool any = false;
    for (std::size_t j = 0; j < g.xi.size(); ++j) {
        shift[j] = -static_cast<std::int64_t>(std::floor(g.xi[j] + 0.5));
        g.xi[j] += static_cast<double>(shift[j]);
        if (g.xi[j] >= 0.5) {
            g.xi[j] -= 1.0;
            shift[j] -= 1;
        }
        any = any || shift[j] != 0;
    }
    if (any) w.tokens.push_back({TokenKind::Lattice, 0, shift});
    w.reduced = std::move(g);
    return w;
}

bool in_fundamental_domain(const GroupPoint& g) {
    if (g.u < -0.5 || g.u >= 0.5) return false;
    if (g.u * g.u + g.v * g.v < 1.0 - 1e-12) return false;
    if (g.phi < 0.0 || g.phi >= pi) return false;
    for (double c : g.xi)
        if (c < -0.5 || c >= 0.5) return false;
    return true;
}

// ---------------------------------------------------------------------------
// metaplectic transform

namespace {

struct Angle {
    double sn, cs;
    int sigma;
};

Angle angle_of(double phi) {
    if (!std::isfinite(phi)) throw InvalidArgument("u_phi: non-finite angle");
    const double n = std::nearbyint(phi / pi);
    if (n != 0.0 && std::fabs(phi - n * pi) < 1e-6)
        throw InvalidArgument("u_phi: angle too close to a nonzero multiple of pi");
    Angle a{std::sin(phi), std::cos(phi), 2 * static_cast<int>(std::floor(phi / pi)) + 1};
    // exact Fourier branch
    const double h = std::nearbyint(phi / (0.5 * pi));
    if (static_cast<long long>(h) % 2 != 0 && phi == h * 0.5 * pi) {
        a.cs = 0.0;
        a.sn = (static_cast<long long>(std::floor(h / 2.0)) % 2 == 0) ? 1.0 : -1.0;
    }
    return a;
}

// Hankel form of U^phi for one radius; `psi` may have any terms.
cplx hankel_transform(const TestPsi& psi, const Angle& a, double w_norm, int k, double tol) {
    if (psi.is_zero()) return {0.0, 0.0};
    const double cot = a.cs / a.sn;
    const double abs_sin = std::fabs(a.sn);
    const double rho = w_norm / abs_sin;
    const double nu = 0.5 * k - 1.0;
    const double r_max = std::sqrt(psi.radius_below(1e-18));
    auto F = [&](double r) { return psi(r * r) * cplx(std::cos(pi * r * r * cot), std::sin(pi * r * r * cot)); };
    const auto pieces = static_cast<int>(std::ceil(2.0 * r_max * (std::fabs(cot) * r_max + 2.0 * rho + 1.0)));
    const double step = r_max / pieces;
    cplx H{0.0, 0.0};
    if (rho == 0.0) {
        auto g = [&](double r) { return F(r) * std::pow(r, k - 1); };
        for (int p = 0; p < pieces; ++p) H += integrate_adaptive(g, p * step, (p + 1) * step, tol / pieces).value;
        H *= k * unit_ball_volume(k);
    } else {
        auto g = [&](double r) {
            if (r == 0.0) return cplx{0.0, 0.0};
            return F(r) * std::cyl_bessel_j(nu, 2.0 * pi * rho * r) * std::pow(r, 0.5 * k);
        };
        for (int p = 0; p < pieces; ++p) H += integrate_adaptive(g, p * step, (p + 1) * step, tol / pieces).value;
        H *= 2.0 * pi * std::pow(rho, 1.0 - 0.5 * k);
    }
    const cplx pre = expi2pi(-k * a.sigma / 8.0) * std::pow(abs_sin, -0.5 * k) *
                     cplx(std::cos(pi * w_norm * w_norm * cot), std::sin(pi * w_norm * w_norm * cot));
    return pre * H;
}

}  // namespace

void u_phi_gaussian_params(double s, double phi, int k, cplx& prefactor, cplx& s_out) {
    if (!(s > 0.0)) throw InvalidArgument("u_phi_gaussian: s must be positive");
    if (phi == 0.0) {
        prefactor = 1.0;
        s_out = s;
        return;
    }
    const Angle a = angle_of(phi);
    const cplx z(s, -a.cs / a.sn);
    const cplx per_dim = std::pow(std::fabs(a.sn), -0.5) / std::sqrt(z);
    cplx p = expi2pi(-k * a.sigma / 8.0);
    for (int j = 0; j < k; ++j) p *= per_dim;
    prefactor = p;
    s_out = cplx(a.sn, -s * a.cs) / cplx(s * a.sn, -a.cs);
}

cplx u_phi_gaussian(double s, double phi, double w_norm, int k) {
    cplx pre, so;
    u_phi_gaussian_params(s, phi, k, pre, so);
    return pre * std::exp(-pi * so * (w_norm * w_norm));
}

cplx u_phi_quadrature(const TestPsi& psi, double phi, double w_norm, int k, const UPhiOptions& opts) {
    if (phi == 0.0) return psi(w_norm * w_norm);
    return hankel_transform(psi, angle_of(phi), w_norm, k, opts.abs_tol);
}

namespace {

// Image of c r^p exp(-pi s r). With z = s - i cot(phi) the Gaussian image is
// P z^{-k/2} exp(-pi (-i cot + 1/(sin^2 z)) r); expanding both factors in
// eps = s - s0 to order p and reading off the eps^p coefficient gives the
// p-th s-derivative as a polynomial in r.
MetaplecticImage::Term transform_term(const PsiTerm& t, const Angle& a, int k) {
    const int p = t.p;
    const double cot = a.cs / a.sn;
    const double sn2 = a.sn * a.sn;
    const cplx z0(t.s, -cot);
    const cplx P0 = expi2pi(-k * a.sigma / 8.0) * std::pow(std::fabs(a.sn), -0.5 * k) * std::pow(std::sqrt(z0), -k);

    // (1 + eps/z0)^{-k/2}
    std::vector<cplx> pref(p + 1);
    cplx c = 1.0;
    for (int n = 0; n <= p; ++n) {
        pref[n] = P0 * c;
        c *= (-0.5 * k - n) / (n + 1.0) / z0;
    }
    // Q(eps) = -pi/sin^2 * (1/(z0 + eps) - 1/z0), no constant term
    std::vector<cplx> Q(p + 1, 0.0);
    cplx zi = 1.0 / z0;
    cplx zpow = zi;
    for (int n = 1; n <= p; ++n) {
        zpow *= -zi;
        Q[n] = -pi / sn2 * zpow;
    }
    // exp(r Q) = sum_j r^j Q^j / j!; E[m][j] is the eps^m coefficient of r^j
    std::vector<std::vector<cplx>> E(p + 1, std::vector<cplx>(p + 1, 0.0));
    std::vector<cplx> Qj(p + 1, 0.0);
    Qj[0] = 1.0;
    double fact = 1.0;
    for (int j = 0; j <= p; ++j) {
        if (j > 0) {
            std::vector<cplx> next(p + 1, 0.0);
            for (int x = 0; x <= p; ++x)
                for (int y = 1; x + y <= p; ++y) next[x + y] += Qj[x] * Q[y];
            Qj = std::move(next);
            fact *= j;
        }
        for (int m = 0; m <= p; ++m) E[m][j] = Qj[m] / fact;
    }
    MetaplecticImage::Term out;
    out.decay = cplx(0.0, -cot) + zi / sn2;
    out.poly.assign(p + 1, 0.0);
    // (-1/pi)^p p! [eps^p]
    double scale = t.c;
    for (int n = 1; n <= p; ++n) scale *= -n / pi;
    for (int n = 0; n <= p; ++n)
        for (int j = 0; j <= p; ++j) out.poly[j] += scale * pref[n] * E[p - n][j];
    return out;
}

cplx eval_terms(const std::vector<MetaplecticImage::Term>& terms, double r) {
    cplx sum{0.0, 0.0};
    for (const auto& t : terms) {
        cplx poly{0.0, 0.0};
        for (auto it = t.poly.rbegin(); it != t.poly.rend(); ++it) poly = poly * r + *it;
        sum += poly * std::exp(-pi * t.decay * r);
    }
    return sum;
}

}  // namespace

cplx u_phi_transform(const TestPsi& psi, double phi, double w_norm, int k, const UPhiOptions& opts) {
    return MetaplecticImage(psi, phi, k, opts)(w_norm);
}

MetaplecticImage::MetaplecticImage(const TestPsi& psi, double phi, int k, const UPhiOptions&) : psi_(psi) {
    if (phi == 0.0) {
        identity_ = true;
        return;
    }
    const Angle a = angle_of(phi);
    for (const auto& t : psi.terms()) terms_.push_back(transform_term(t, a, k));
}

cplx MetaplecticImage::operator()(double w_norm) const {
    if (identity_) return psi_(w_norm * w_norm);
    return eval_terms(terms_, w_norm * w_norm);
}

double MetaplecticImage::truncation_radius(double tol) const {
    if (identity_) return std::sqrt(psi_.radius_below(tol));
    // sum_j |a_j| r^j exp(-pi Re(decay) r) dominates |f_phi| and has the form of a TestPsi envelope
    std::vector<PsiTerm> env;
    for (const auto& t : terms_)
        for (std::size_t j = 0; j < t.poly.size(); ++j)
            if (std::abs(t.poly[j]) > 0.0) env.push_back(PsiTerm{std::abs(t.poly[j]), t.decay.real(), static_cast<int>(j)});
    if (env.empty()) return 0.0;
    return std::sqrt(TestPsi(std::move(env)).radius_below(tol));
}

// ---------------------------------------------------------------------------
// theta sums

namespace {

// Visits m with |m - y|^2 <= bound: visit(m, |m - y|^2).
template <class Visit>
void visit_ball(const std::vector<double>& y, double bound, Visit&& visit) {
    const SlabRange r = outer_slabs(y[0], bound);
    for (std::int64_t m0 = r.first; m0 <= r.last; ++m0) enumerate_ball_slab(y, bound, m0, visit);
}

std::vector<double> y_part(const GroupPoint& g) {
    return std::vector<double>(g.xi.begin() + g.k(), g.xi.end());
}

}  // namespace

ThetaSumResult theta_sum(const TestPsi& psi, const GroupPoint& g, const ThetaOptions& opts) {
    const int k = g.k();
    const MetaplecticImage img(psi, g.phi, k, opts.uphi);
    const double W = img.truncation_radius(opts.tol);
    const double bound = W * W / g.v;
    const auto y = y_part(g);
    ThetaSumResult res;
    visit_ball(y, bound, [&](const std::int64_t* m, double d2) {
        const cplx f = img(std::sqrt(d2 * g.v));
        double t = product_frac(0.5 * g.u, d2);
        for (int j = 0; j < k; ++j) t += product_frac(static_cast<double>(m[j]), g.xi[j]);
        res.value += f * expi2pi(t);
        ++res.terms;
    });
    const double scale = std::pow(g.v, 0.25 * k);
    res.value *= scale;
    res.truncation_error =
        opts.tol * scale * std::max(1.0, std::pow(g.v, -0.5 * k)) * k * unit_ball_volume(k) * std::pow(W + 1.0, k - 1);
    return res;
}

cplx theta_pair(const TestPsi& f, const TestPsi& g, const GroupPoint& point, const ThetaOptions& opts) {
    return theta_sum(f, point, opts).value * std::conj(theta_sum(g, point, opts).value);
}

cplx cusp_diagonal(const TestPsi& f, const TestPsi& g, const GroupPoint& point, const ThetaOptions& opts) {
    const int k = point.k();
    const MetaplecticImage fi(f, point.phi, k, opts.uphi), gi(g, point.phi, k, opts.uphi);
    const double W = std::max(fi.truncation_radius(opts.tol), gi.truncation_radius(opts.tol));
    cplx sum{0.0, 0.0};
    visit_ball(y_part(point), W * W / point.v, [&](const std::int64_t*, double d2) {
        const double w = std::sqrt(d2 * point.v);
        sum += fi(w) * std::conj(gi(w));
    });
    return std::pow(point.v, 0.5 * k) * sum;
}

cplx cusp_nearest(const TestPsi& f, const TestPsi& g, const GroupPoint& point, const ThetaOptions& opts) {
    const int k = point.k();
    const MetaplecticImage fi(f, point.phi, k, opts.uphi), gi(g, point.phi, k, opts.uphi);
    double d2 = 0.0;
    for (int j = 0; j < k; ++j) {
        const double d = std::nearbyint(point.y(j)) - point.y(j);
        d2 += d * d;
    }
    const double w = std::sqrt(d2 * point.v);
    return std::pow(point.v, 0.5 * k) * fi(w) * std::conj(gi(w));
}

double mean_square_haar(const TestPsi& psi1, const TestPsi& psi2, int k) {
    return 0.5 * k * unit_ball_volume(k) * psi_moment(psi1, psi2, 0.5 * k - 1.0);
}

// ---------------------------------------------------------------------------
// horocycle integrals

double theta_cutoff(const TestPsi& psi1, const TestPsi& psi2, double v, double tol) {
    if (!(v > 0.0)) throw InvalidArgument("theta_cutoff: v must be positive");
    return std::max(psi1.radius_below(tol), psi2.radius_below(tol)) / v;
}

namespace {

constexpr std::size_t kPanelChunk = 64;
constexpr std::size_t kPointBlock = 256;
constexpr int kOrder = 16;

struct LinePoints {
    std::vector<double> lambda, a, b;
    bool same = false;
    double sum_abs = 0.0;
};

LinePoints line_points(const SpectrumSlice& slice, const TestPsi& psi1, const TestPsi& psi2, double v, double tol) {
    const double need = theta_cutoff(psi1, psi2, v, tol);
    if (slice.cutoff < need)
        throw InsufficientData("horocycle integral: spectrum cutoff " + format_real(slice.cutoff) + " below " +
                               format_real(need));
    LinePoints pts;
    pts.same = psi1 == psi2;
    for (double lam : slice.lambdas) {
        if (lam > need) break;
        const double wa = psi1(lam * v);
        const double wb = pts.same ? wa : psi2(lam * v);
        if (!pts.lambda.empty() && pts.lambda.back() == lam) {
            pts.a.back() += wa;
            pts.b.back() += wb;
        } else {
            pts.lambda.push_back(lam);
            pts.a.push_back(wa);
            pts.b.push_back(wb);
        }
        pts.sum_abs += std::fabs(wa) + std::fabs(wb);
    }
    return pts;
}

struct LineSetup {
    double scale, U;
    std::size_t panels;
};

LineSetup line_setup(const LinePoints& pts, const WeightH& h, double v, double sigma,
                     const ThetaIntegralOptions& opts) {
    LineSetup s;
    s.scale = std::pow(v, sigma);
    s.U = h.half_width() / s.scale;
    const double lam_max = pts.lambda.empty() ? 0.0 : std::max(std::fabs(pts.lambda.back()), 1e-300);
    double w = opts.max_panel_width;
    if (lam_max > 0.0) w = std::min(w, 2.0 / lam_max);
    const double n = std::ceil(s.U / w);
    if (!(n <= static_cast<double>(opts.panel_budget)))
        throw ResourceExhausted("horocycle integral: " + format_real(n) + " panels exceed the budget");
    s.panels = std::max<std::size_t>(1, static_cast<std::size_t>(n));
    return s;
}

// 2 Re int_0^U S1 conj(S2) h(scale u) scale du on `panels` GL16 panels.
double line_integral(const LinePoints& pts, const WeightH& h, double scale, double U, std::size_t panels,
                     Parallelism par) {
    const auto& rule = gauss_legendre(kOrder);
    const std::size_t N = pts.lambda.size();
    const double width = U / static_cast<double>(panels);
    std::vector<double> er(kOrder * N), ei(kOrder * N), sr(N), si(N), half_lam(N);
    for (std::size_t j = 0; j < N; ++j) {
        half_lam[j] = 0.5 * pts.lambda[j];
        for (int q = 0; q < kOrder; ++q) {
            const cplx e = expi2pi(product_frac(half_lam[j], 0.5 * width * (1.0 + rule.nodes[q])));
            er[q * N + j] = e.real();
            ei[q * N + j] = e.imag();
        }
        const cplx st = expi2pi(product_frac(half_lam[j], width));
        sr[j] = st.real();
        si[j] = st.imag();
    }
    const std::size_t n_chunks = chunk_count(panels, kPanelChunk);
    std::vector<double> chunk_value(n_chunks, 0.0);
    for_each_chunk(n_chunks, par, [&](std::size_t c) {
        const std::size_t p0 = c * kPanelChunk;
        const std::size_t p1 = std::min(panels, p0 + kPanelChunk);
        const std::size_t np = p1 - p0;
        std::vector<double> a1r(np * kOrder, 0.0), a1i(np * kOrder, 0.0), a2r, a2i;
        if (!pts.same) {
            a2r.assign(np * kOrder, 0.0);
            a2i.assign(np * kOrder, 0.0);
        }
        double zr[kPointBlock], zi[kPointBlock];
        const double u0 = static_cast<double>(p0) * width;
        for (std::size_t j0 = 0; j0 < N; j0 += kPointBlock) {
            const std::size_t nb = std::min(kPointBlock, N - j0);
            for (std::size_t j = 0; j < nb; ++j) {
                const cplx z = expi2pi(product_frac(half_lam[j0 + j], u0));
                zr[j] = z.real();
                zi[j] = z.imag();
            }
            const double* A = pts.a.data() + j0;
            const double* B = pts.b.data() + j0;
            for (std::size_t p = 0; p < np; ++p) {
                for (int q = 0; q < kOrder; ++q) {
                    const double* Er = er.data() + q * N + j0;
                    const double* Ei = ei.data() + q * N + j0;
                    double s1r = 0, s1i = 0, s2r = 0, s2i = 0;
                    if (pts.same) {
                        for (std::size_t j = 0; j < nb; ++j) {
                            const double cr = zr[j] * Er[j] - zi[j] * Ei[j];
                            const double ci = zr[j] * Ei[j] + zi[j] * Er[j];
                            s1r += A[j] * cr;
                            s1i += A[j] * ci;
                        }
                    } else {
                        for (std::size_t j = 0; j < nb; ++j) {
                            const double cr = zr[j] * Er[j] - zi[j] * Ei[j];
                            const double ci = zr[j] * Ei[j] + zi[j] * Er[j];
                            s1r += A[j] * cr;
                            s1i += A[j] * ci;
                            s2r += B[j] * cr;
                            s2i += B[j] * ci;
                        }
                        a2r[p * kOrder + q] += s2r;
                        a2i[p * kOrder + q] += s2i;
                    }
                    a1r[p * kOrder + q] += s1r;
                    a1i[p * kOrder + q] += s1i;
                }
                for (std::size_t j = 0; j < nb; ++j) {
                    const double nr = zr[j] * sr[j0 + j] - zi[j] * si[j0 + j];
                    zi[j] = zr[j] * si[j0 + j] + zi[j] * sr[j0 + j];
                    zr[j] = nr;
                }
            }
        }
        double total = 0.0;
        for (std::size_t p = 0; p < np; ++p) {
            const double lo = static_cast<double>(p0 + p) * width;
            double part = 0.0;
            for (int q = 0; q < kOrder; ++q) {
                const double u = lo + 0.5 * width * (1.0 + rule.nodes[q]);
                const std::size_t i = p * kOrder + q;
                const double re = pts.same ? a1r[i] * a1r[i] + a1i[i] * a1i[i] : a1r[i] * a2r[i] + a1i[i] * a2i[i];
                part += rule.weights[q] * re * h(scale * u);
            }
            total += 0.5 * width * part;
        }
        chunk_value[c] = total;
    });
    double sum = 0.0;
    for (double x : chunk_value) sum += x;
    return 2.0 * scale * sum;
}

double line_integral_serial(const LinePoints& pts, const WeightH& h, double scale, double U, std::size_t panels) {
    const auto& rule = gauss_legendre(kOrder);
    const double width = U / static_cast<double>(panels);
    double total = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
        const double lo = static_cast<double>(p) * width;
        double part = 0.0;
        for (int q = 0; q < kOrder; ++q) {
            const double u = lo + 0.5 * width * (1.0 + rule.nodes[q]);
            cplx s1{0.0, 0.0}, s2{0.0, 0.0};
            for (std::size_t j = 0; j < pts.lambda.size(); ++j) {
                const cplx e = expi2pi(product_frac(0.5 * pts.lambda[j], u));
                s1 += pts.a[j] * e;
                s2 += pts.b[j] * e;
            }
            part += rule.weights[q] * (s1 * std::conj(s2)).real() * h(scale * u);
        }
        total += 0.5 * width * part;
    }
    return 2.0 * scale * total;
}

template <class Kernel>
ThetaIntegralResult run_line(const SpectrumSlice& slice, const TestPsi& psi1, const TestPsi& psi2, const WeightH& h,
                             double v, double sigma, const ThetaIntegralOptions& opts, Kernel&& kernel) {
    if (!(v > 0.0)) throw InvalidArgument("horocycle integral: v must be positive");
    const LinePoints pts = line_points(slice, psi1, psi2, v, opts.tol);
    const LineSetup s = line_setup(pts, h, v, sigma, opts);
    const double norm = std::pow(v, 0.5 * slice.spec.k());
    ThetaIntegralResult r;
    r.points = pts.lambda.size();
    r.panels = s.panels;
    const double coarse = norm * kernel(pts, h, s.scale, s.U, s.panels);
    if (opts.richardson) {
        if (2 * s.panels > opts.panel_budget) throw ResourceExhausted("horocycle integral: panel budget");
        const double fine = norm * kernel(pts, h, s.scale, s.U, 2 * s.panels);
        r.value = fine;
        r.error_estimate = std::fabs(fine - coarse);
        r.panels = 2 * s.panels;
    } else {
        r.value = coarse;
    }
    r.truncation_error = opts.tol * norm * 2.0 * std::fabs(h.integral()) * pts.sum_abs;
    return r;
}

}  // namespace

ThetaIntegralResult horocycle_theta_integral(const SpectrumSlice& slice, const TestPsi& psi1, const TestPsi& psi2,
                                             const WeightH& h, double v, double sigma,
                                             const ThetaIntegralOptions& opts) {
    return run_line(slice, psi1, psi2, h, v, sigma, opts,
                    [&](const LinePoints& p, const WeightH& hh, double sc, double U, std::size_t n) {
                        return line_integral(p, hh, sc, U, n, opts.par);
                    });
}

namespace serial {
ThetaIntegralResult horocycle_theta_integral(const SpectrumSlice& slice, const TestPsi& psi1, const TestPsi& psi2,
                                             const WeightH& h, double v, double sigma,
                                             const ThetaIntegralOptions& opts) {
    return run_line(slice, psi1, psi2, h, v, sigma, opts,
                    [](const LinePoints& p, const WeightH& hh, double sc, double U, std::size_t n) {
                        return line_integral_serial(p, hh, sc, U, n);
                    });
}
}  // namespace serial

ThetaIntegralResult r2_theta_integral(const SpectrumSlice& slice, const TestPsi& psi1, const TestPsi& psi2,
                                      const WeightH& h, double lambda, const ThetaIntegralOptions& opts) {
    if (!(lambda > 0.0)) throw InvalidArgument("r2_theta_integral: lambda must be positive");
    const int k = slice.spec.k();
    auto r = horocycle_theta_integral(slice, psi1, psi2, h, 1.0 / lambda, 0.5 * k - 1.0, opts);
    const double bk = unit_ball_volume(k);
    r.value /= bk;
    r.error_estimate /= bk;
    r.truncation_error /= bk;
    return r;
}

ThetaIntegralResult r2_theta_integral(const TestPsi& psi1, const TestPsi& psi2, const WeightH& h, double lambda,
                                      const TorusSpec& spec, const ThetaIntegralOptions& opts) {
    if (!(lambda > 0.0)) throw InvalidArgument("r2_theta_integral: lambda must be positive");
    SpectrumOptions so;
    so.memory_budget = opts.memory_budget;
    so.par = opts.par;
    const auto slice = enumerate_spectrum(spec, theta_cutoff(psi1, psi2, 1.0 / lambda, opts.tol), so);
    return r2_theta_integral(slice, psi1, psi2, h, lambda, opts);
}

}  // namespace qtorus
