#include "qtorus/degeneracy.hpp"

#include <algorithm>
#include <cmath>

#include "qtorus/errors.hpp"
#include "qtorus/lattice.hpp"
#include "qtorus/spectrum.hpp"

namespace qtorus {

namespace {

struct KeyBlock {
    int p = 0;  // leading irrational components
    std::int64_t q = 1;
    double q2 = 1.0;
    std::vector<std::int64_t> scaled;  // q * alpha_j for j >= p
    std::vector<double> prefix_alpha, block_alpha;
};

KeyBlock make_block(const TorusSpec& spec, double bound) {
    KeyBlock b;
    const int k = spec.k();
    while (b.p < k && !spec.exact_component(b.p)) ++b.p;
    if (b.p == k) throw InvalidArgument("degeneracy: alpha has no exact components, keys unavailable");
    for (int j = b.p; j < k; ++j)
        if (!spec.exact_component(j))
            throw InvalidArgument("degeneracy: exact components must form a trailing block");
    b.q = spec.common_denominator();
    const double qd = static_cast<double>(b.q);
    const double r = std::sqrt(bound) + 2.0;
    if (qd * qd * bound > 4503599627370496.0 || qd * qd * r * r * (k - b.p) > 4.0e18)
        throw ResourceExhausted("degeneracy: exact keys q^2 * cutoff do not fit in 52 bits");
    b.q2 = qd * qd;
    for (int j = 0; j < b.p; ++j) b.prefix_alpha.push_back(spec.alpha()[j]);
    for (int j = b.p; j < k; ++j) {
        const Rational& a = *spec.exact_component(j);
        b.scaled.push_back(a.num * (b.q / a.den));
        b.block_alpha.push_back(spec.alpha()[j]);
    }
    return b;
}

std::int64_t block_key(const KeyBlock& b, const std::int64_t* m) {
    std::int64_t key = 0;
    for (std::size_t j = 0; j < b.scaled.size(); ++j) {
        const std::int64_t d = b.q * m[j] - b.scaled[j];
        key += d * d;
    }
    return key;
}

template <class Visit>
void for_each_ball_point(const std::vector<double>& alpha, double bound, Visit&& visit) {
    const SlabRange slabs = outer_slabs(alpha[0], bound);
    for (std::int64_t m0 = slabs.first; m0 <= slabs.last; ++m0) enumerate_ball_slab(alpha, bound, m0, visit);
}

// Sorted keys -> groups of size >= 2 at lambda = base + key / q^2.
void emit_groups(std::vector<std::int64_t>& keys, double base, const KeyBlock& b, int k, double X_max,
                 std::vector<DegenerateGroup>& out) {
    std::sort(keys.begin(), keys.end());
    for (std::size_t i = 0; i < keys.size();) {
        std::size_t j = i + 1;
        while (j < keys.size() && keys[j] == keys[i]) ++j;
        if (j - i >= 2) {
            const double lam = base + static_cast<double>(keys[i]) / b.q2;
            if (rescale(lam, k) <= X_max) out.push_back(DegenerateGroup{lam, static_cast<std::int64_t>(j - i)});
        }
        i = j;
    }
}

double enumeration_bound(int k, double X_max) {
    return std::pow(X_max, 2.0 / k) * (1.0 + 1e-9) + 1e-12;
}

// Slab m0 of the outermost coordinate. Fully rational: raw keys for the
// caller to merge. Critical: groups are complete within each prefix point.
void slab_work(const TorusSpec& spec, const KeyBlock& b, double bound, double X_max, std::int64_t m0,
               std::vector<std::int64_t>& keys, std::vector<DegenerateGroup>& groups) {
    const int k = spec.k();
    if (b.p == 0) {
        enumerate_ball_slab(b.block_alpha, bound, m0, [&](const std::int64_t* m, double) {
            const std::int64_t key = block_key(b, m);
            if (rescale(static_cast<double>(key) / b.q2, k) <= X_max) keys.push_back(key);
        });
        return;
    }
    std::vector<std::int64_t> local;
    enumerate_ball_slab(b.prefix_alpha, bound, m0, [&](const std::int64_t*, double s) {
        local.clear();
        const double rest = bound - s;
        for_each_ball_point(b.block_alpha, rest, [&](const std::int64_t* m, double) {
            local.push_back(block_key(b, m));
        });
        emit_groups(local, s, b, k, X_max, groups);
    });
}

bool by_lambda(const DegenerateGroup& a, const DegenerateGroup& b) { return a.lambda < b.lambda; }

std::vector<DegenerateGroup> keys_to_groups(std::vector<std::int64_t>& keys, const KeyBlock& b, int k,
                                            double X_max) {
    std::vector<DegenerateGroup> out;
    // keys arrive sorted; emit_groups re-sorts, which is a linear pass here
    emit_groups(keys, 0.0, b, k, X_max, out);
    return out;
}

}  // namespace

std::vector<DegenerateGroup> degenerate_groups(const TorusSpec& spec, double X_max, Parallelism par) {
    if (!(X_max > 0.0)) throw InvalidArgument("degeneracy: X must be positive");
    const int k = spec.k();
    const double bound = enumeration_bound(k, X_max);
    const KeyBlock b = make_block(spec, bound);
    const SlabRange slabs = outer_slabs(spec.alpha()[0], bound);
    std::vector<std::vector<std::int64_t>> key_runs(slabs.count());
    std::vector<std::vector<DegenerateGroup>> group_runs(slabs.count());
    for_each_chunk(slabs.count(), par, [&](std::size_t s) {
        slab_work(spec, b, bound, X_max, slabs.first + static_cast<std::int64_t>(s), key_runs[s], group_runs[s]);
        std::sort(key_runs[s].begin(), key_runs[s].end());
        std::stable_sort(group_runs[s].begin(), group_runs[s].end(), by_lambda);
    });
    if (b.p == 0) {
        std::vector<std::int64_t> keys = merge_sorted_runs(std::move(key_runs), std::less<>{}, par);
        return keys_to_groups(keys, b, k, X_max);
    }
    return merge_sorted_runs(std::move(group_runs), by_lambda, par);
}

namespace serial {
std::vector<DegenerateGroup> degenerate_groups(const TorusSpec& spec, double X_max) {
    if (!(X_max > 0.0)) throw InvalidArgument("degeneracy: X must be positive");
    const int k = spec.k();
    const double bound = enumeration_bound(k, X_max);
    const KeyBlock b = make_block(spec, bound);
    const SlabRange slabs = outer_slabs(spec.alpha()[0], bound);
    std::vector<std::int64_t> keys;
    std::vector<DegenerateGroup> groups;
    for (std::int64_t m0 = slabs.first; m0 <= slabs.last; ++m0) slab_work(spec, b, bound, X_max, m0, keys, groups);
    if (b.p == 0) return keys_to_groups(keys, b, k, X_max);
    std::stable_sort(groups.begin(), groups.end(), by_lambda);
    return groups;
}
}  // namespace serial

std::int64_t count_equal_pairs(const TorusSpec& spec, double X, Parallelism par) {
    std::int64_t total = 0;
    for (const auto& g : degenerate_groups(spec, X, par)) total += g.size * (g.size - 1);
    return total;
}

std::int64_t count_equal_pairs_between(const TorusSpec& spec, double X_lo, double X_hi, Parallelism par) {
    if (!(X_lo <= X_hi)) throw InvalidArgument("count_equal_pairs_between: empty range");
    std::int64_t total = 0;
    for (const auto& g : degenerate_groups(spec, X_hi, par))
        if (rescale(g.lambda, spec.k()) >= X_lo) total += g.size * (g.size - 1);
    return total;
}

std::map<std::int64_t, std::int64_t> key_multiplicities(const TorusSpec& spec, double cutoff) {
    if (!spec.fully_rational()) throw InvalidArgument("key_multiplicities: alpha must be rational");
    const SpectrumSlice slice = enumerate_spectrum(spec, cutoff);
    std::map<std::int64_t, std::int64_t> out;
    for (auto key : *slice.exact_keys) ++out[key];
    return out;
}

std::string_view to_string(GrowthModel model) {
    return model == GrowthModel::power_law ? "power_law" : "logarithmic";
}

DegeneracyCurve degeneracy_curve(const TorusSpec& spec, std::span<const double> Xs, Parallelism par) {
    if (Xs.empty()) throw InvalidArgument("degeneracy_curve: no sample points");
    for (std::size_t i = 0; i < Xs.size(); ++i) {
        if (!(Xs[i] > 0.0)) throw InvalidArgument("degeneracy_curve: X must be positive");
        if (i > 0 && !(Xs[i] > Xs[i - 1])) throw InvalidArgument("degeneracy_curve: X must be strictly increasing");
    }
    const auto groups = degenerate_groups(spec, Xs.back(), par);
    std::vector<std::pair<double, std::int64_t>> by_x;
    by_x.reserve(groups.size());
    for (const auto& g : groups) by_x.emplace_back(rescale(g.lambda, spec.k()), g.size * (g.size - 1));
    std::sort(by_x.begin(), by_x.end());
    DegeneracyCurve curve{spec, {}, 0.0, 0.0};
    std::size_t idx = 0;
    std::int64_t running = 0;
    for (double X : Xs) {
        while (idx < by_x.size() && by_x[idx].first <= X) running += by_x[idx++].second;
        curve.samples.push_back(DegeneracySample{X, running, static_cast<double>(running) / X});
    }
    if (curve.samples.size() >= 5 && Xs.back() >= 100.0 * Xs.front() && curve.samples.front().count > 0) {
        GrowthFit fit = growth_fit(curve);
        curve.fitted_exponent = fit.model == GrowthModel::power_law ? fit.exponent : fit.loglog_exponent;
        curve.fitted_log_coefficient = fit.log_coefficient;
    }
    return curve;
}

namespace {
struct LineFit {
    double slope, intercept, r2;
};
LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    const double slope = sxy / sxx;
    const double r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return {slope, my - slope * mx, r2};
}
}  // namespace

GrowthFit growth_fit(const DegeneracyCurve& curve) {
    const auto& s = curve.samples;
    if (s.size() < 5) throw InsufficientData("growth_fit: need at least 5 samples");
    if (s.back().X < 100.0 * s.front().X) throw InsufficientData("growth_fit: samples must span two decades");
    if (s.front().X <= std::exp(1.0)) throw InsufficientData("growth_fit: log log X needs X > e");
    std::vector<double> lx, llx, ly;
    for (const auto& p : s) {
        if (p.count <= 0) throw InsufficientData("growth_fit: zero counts cannot be fitted on a log scale");
        lx.push_back(std::log(p.X));
        llx.push_back(std::log(std::log(p.X)));
        ly.push_back(std::log(p.normalized));
    }
    const LineFit power = least_squares(lx, ly);
    const LineFit loglog = least_squares(llx, ly);
    GrowthFit fit;
    // rational alpha grows like X^{(k-2)/k}, which is logarithmic at k = 2;
    // critical vectors grow logarithmically in every dimension
    fit.model = curve.spec.fully_rational() && curve.spec.k() > 2 ? GrowthModel::power_law : GrowthModel::logarithmic;
    fit.exponent = power.slope;
    fit.r_squared = power.r2;
    fit.loglog_exponent = loglog.slope;
    fit.loglog_r_squared = loglog.r2;
    fit.log_coefficient = fit.model == GrowthModel::power_law ? power.intercept : loglog.intercept;
    return fit;
}

std::string degeneracy_csv_header() {
    return "X,count,normalized,model,exponent,log_coefficient,r_squared,loglog_exponent";
}

std::vector<std::string> degeneracy_csv_rows(const DegeneracyCurve& curve, const GrowthFit& fit) {
    std::vector<std::string> rows;
    for (const auto& p : curve.samples)
        rows.push_back(format_real(p.X) + "," + std::to_string(p.count) + "," + format_real(p.normalized) + "," +
                       std::string(to_string(fit.model)) + "," + format_real(fit.exponent) + "," +
                       format_real(fit.log_coefficient) + "," + format_real(fit.r_squared) + "," +
                       format_real(fit.loglog_exponent));
    return rows;
}

}  // namespace qtorus
