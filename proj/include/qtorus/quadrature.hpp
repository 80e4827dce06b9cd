#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "qtorus/errors.hpp"

namespace qtorus {

struct GaussLegendreRule {
    std::vector<double> nodes;    // on [-1, 1], ascending
    std::vector<double> weights;
};

// n-point rule computed by Newton iteration on P_n; cached per n.
const GaussLegendreRule& gauss_legendre(int n);

// Composite Gauss-Legendre over `panels` equal panels of [a, b].
template <class F>
auto integrate_panels(F&& f, double a, double b, int panels, int order = 16) {
    const auto& rule = gauss_legendre(order);
    using R = decltype(f(a));
    R total{};
    const double width = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * width;
        const double half = 0.5 * width;
        const double mid = lo + half;
        R part{};
        for (std::size_t q = 0; q < rule.nodes.size(); ++q)
            part += rule.weights[q] * f(mid + half * rule.nodes[q]);
        total += half * part;
    }
    return total;
}

template <class T>
struct QuadResult {
    T value{};
    double error = 0.0;
    std::size_t evaluations = 0;
};

namespace detail {

struct Kronrod15 {
    static constexpr double xgk[8] = {
        0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
        0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
    static constexpr double wgk[8] = {
        0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
    static constexpr double wg[4] = {
        0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
        0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
};

template <class F, class T>
void gk15(F& f, double a, double b, T& value, double& err) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    T fc = f(c);
    T rk = fc * Kronrod15::wgk[7];
    T rg = fc * Kronrod15::wg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * Kronrod15::xgk[j];
        T f1 = f(c - dx), f2 = f(c + dx);
        rk += Kronrod15::wgk[j] * (f1 + f2);
        if (j % 2 == 1) rg += Kronrod15::wg[j / 2] * (f1 + f2);
    }
    value = rk * h;
    err = std::abs(rk * h - rg * h);
}

template <class F, class T>
void adaptive_step(F& f, double a, double b, double tol, int depth, QuadResult<T>& out,
                   const T& whole, double whole_err) {
    if (whole_err <= tol || depth == 0 || b - a < 1e-14 * (std::fabs(a) + std::fabs(b))) {
        out.value += whole;
        out.error += whole_err;
        return;
    }
    const double m = 0.5 * (a + b);
    T left, right;
    double el, er;
    gk15(f, a, m, left, el);
    gk15(f, m, b, right, er);
    out.evaluations += 30;
    adaptive_step(f, a, m, 0.5 * tol, depth - 1, out, left, el);
    adaptive_step(f, m, b, 0.5 * tol, depth - 1, out, right, er);
}

}  // namespace detail

// Recursive bisection with a 7/15 Gauss-Kronrod pair. Works for real or
// complex integrands.
template <class F>
auto integrate_adaptive(F&& f, double a, double b, double abs_tol, int max_depth = 40) {
    using T = decltype(f(a));
    QuadResult<T> out;
    T whole;
    double err;
    detail::gk15(f, a, b, whole, err);
    out.evaluations = 15;
    detail::adaptive_step(f, a, b, abs_tol, max_depth, out, whole, err);
    return out;
}

}  // namespace qtorus
