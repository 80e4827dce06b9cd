#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "qtorus/errors.hpp"

namespace qtorus {

constexpr int kMaxDimension = 16;

struct SlabRange {
    std::int64_t first = 0;
    std::int64_t last = -1;  // inclusive
    std::size_t count() const { return last >= first ? static_cast<std::size_t>(last - first + 1) : 0; }
};

// Candidate values of the outer coordinate; one wider than the exact box on
// each side so rounding in sqrt never loses a point. Callers filter.
inline SlabRange outer_slabs(double alpha0, double bound) {
    double r = std::sqrt(bound);
    return SlabRange{static_cast<std::int64_t>(std::ceil(alpha0 - r)) - 1,
                     static_cast<std::int64_t>(std::floor(alpha0 + r)) + 1};
}

// Visits every m in Z^k with first coordinate m0 and
// sum_j (m_j - alpha_j)^2 <= bound, the sum accumulated left to right.
// visit(const std::int64_t* m, double sum).
template <class Visit>
void enumerate_ball_slab(const std::vector<double>& alpha, double bound, std::int64_t m0, Visit&& visit) {
    const int k = static_cast<int>(alpha.size());
    if (k > kMaxDimension) throw InvalidArgument("dimension too large for enumeration");
    std::array<std::int64_t, kMaxDimension> m{};
    std::array<double, kMaxDimension + 1> partial{};
    const double d0 = static_cast<double>(m0) - alpha[0];
    partial[1] = d0 * d0;
    if (partial[1] > bound) return;
    m[0] = m0;
    if (k == 1) {
        visit(m.data(), partial[1]);
        return;
    }
    // Iterative depth-first walk over coordinates 1..k-1.
    std::array<std::int64_t, kMaxDimension> hi{};
    int j = 1;
    auto open_level = [&](int level) {
        double r = bound - partial[level];
        double s = std::sqrt(r > 0.0 ? r : 0.0);
        m[level] = static_cast<std::int64_t>(std::ceil(alpha[level] - s)) - 1;
        hi[level] = static_cast<std::int64_t>(std::floor(alpha[level] + s)) + 1;
    };
    open_level(1);
    while (j >= 1) {
        if (m[j] > hi[j]) {
            --j;
            if (j >= 1) ++m[j];
            continue;
        }
        const double d = static_cast<double>(m[j]) - alpha[j];
        const double sum = partial[j] + d * d;
        if (sum > bound) {
            ++m[j];
            continue;
        }
        if (j == k - 1) {
            visit(m.data(), sum);
            ++m[j];
        } else {
            partial[j + 1] = sum;
            ++j;
            open_level(j);
        }
    }
}

}  // namespace qtorus
