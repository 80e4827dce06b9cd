// Independent reference computations used only by the tests. Nothing here
// calls into the library's numerical kernels.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace oracle {

inline constexpr double pi = 3.14159265358979323846;

// Composite Simpson on [a, b] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

// tanh-sinh on [0, inf) via x = exp(pi/2 sinh t); good for smooth, decaying integrands.
inline double exp_sinh(const std::function<double(double)>& f, double h = 1.0 / 64, double tmax = 4.5) {
    double s = 0.0;
    for (double t = -tmax; t <= tmax; t += h) {
        const double x = std::exp(0.5 * pi * std::sinh(t));
        const double dx = 0.5 * pi * std::cosh(t) * x;
        const double fx = f(x);
        if (std::isfinite(fx)) s += fx * dx;
    }
    return s * h;
}

// sorted ||m - alpha||^2 <= L over the full box, summed left to right.
inline std::vector<double> naive_spectrum(const std::vector<double>& alpha, double L) {
    const int k = static_cast<int>(alpha.size());
    const int r = static_cast<int>(std::ceil(std::sqrt(L))) + 2;
    std::vector<double> out;
    std::vector<int> m(k, -r);
    while (true) {
        double sum = 0.0;
        for (int j = 0; j < k; ++j) {
            const double d = static_cast<double>(m[j]) - alpha[j];
            sum += d * d;
        }
        if (sum <= L) out.push_back(sum);
        int j = k - 1;
        while (j >= 0 && m[j] == r) m[j--] = -r;
        if (j < 0) break;
        ++m[j];
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Integer keys sum (q m_j - p_j)^2 with q^2 lambda <= q^2 L, for alpha_j = p_j / q.
inline std::vector<std::int64_t> naive_keys(const std::vector<std::int64_t>& p, std::int64_t q, double L) {
    const int k = static_cast<int>(p.size());
    const int r = static_cast<int>(std::ceil(std::sqrt(L))) + 2;
    std::vector<std::int64_t> out;
    std::vector<int> m(k, -r);
    while (true) {
        std::int64_t key = 0;
        for (int j = 0; j < k; ++j) {
            const std::int64_t d = q * m[j] - p[j];
            key += d * d;
        }
        if (static_cast<double>(key) / (static_cast<double>(q) * static_cast<double>(q)) <= L) out.push_back(key);
        int j = k - 1;
        while (j >= 0 && m[j] == r) m[j--] = -r;
        if (j < 0) break;
        ++m[j];
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Ordered pairs i != j with both points in [lo, hi] and p_i - p_j in [a, b].
inline std::int64_t naive_pairs(const std::vector<double>& pts, double lo, double hi, double a, double b) {
    std::int64_t n = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (pts[i] < lo || pts[i] > hi) continue;
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (i == j || pts[j] < lo || pts[j] > hi) continue;
            const double d = pts[i] - pts[j];
            if (d >= a && d <= b) ++n;
        }
    }
    return n;
}

// Ordered pairs of equal integer keys.
inline std::int64_t naive_equal_pairs(const std::vector<std::int64_t>& keys) {
    std::int64_t n = 0;
    for (std::size_t i = 0; i < keys.size(); ++i)
        for (std::size_t j = 0; j < keys.size(); ++j)
            if (i != j && keys[i] == keys[j]) ++n;
    return n;
}

// r_k(n): representations of n as a sum of k squares, by brute force.
inline std::int64_t r_k(int k, int n) {
    const int r = static_cast<int>(std::sqrt(static_cast<double>(n))) + 1;
    std::int64_t count = 0;
    std::vector<int> m(k, -r);
    while (true) {
        int s = 0;
        for (int x : m) s += x * x;
        if (s == n) ++count;
        int j = k - 1;
        while (j >= 0 && m[j] == r) m[j--] = -r;
        if (j < 0) break;
        ++m[j];
    }
    return count;
}

// sum_{n in Z} exp(-pi s n^2)
inline double jacobi_sum(double s) {
    double t = 1.0;
    for (int n = 1; n < 60; ++n) t += 2.0 * std::exp(-pi * s * n * n);
    return t;
}

inline std::filesystem::path temp_dir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    auto p = std::filesystem::temp_directory_path() / ("qtorus-test-" + tag + "-" + std::to_string(rng() % 1000000000));
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace oracle
