#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qtorus/core_types.hpp"
#include "qtorus/parallel.hpp"

namespace qtorus {

// A set of lattice points sharing one exact key; all of them carry the same
// eigenvalue lambda.
struct DegenerateGroup {
    double lambda = 0.0;
    std::int64_t size = 0;
};

// Groups of size >= 2 with rescaled value lambda^{k/2} <= X_max, sorted by
// lambda. Requires exact components: either all of alpha, or a trailing
// block after irrational leading components (critical vectors), in which
// case ties need equal leading coordinates.
std::vector<DegenerateGroup> degenerate_groups(const TorusSpec& spec, double X_max, Parallelism par = {});

// Ordered pairs m != n with equal keys and both rescaled values <= X.
std::int64_t count_equal_pairs(const TorusSpec& spec, double X, Parallelism par = {});
// Same, restricted to rescaled values in [X_lo, X_hi].
std::int64_t count_equal_pairs_between(const TorusSpec& spec, double X_lo, double X_hi, Parallelism par = {});

// Fully rational alpha: exact key q^2 lambda -> number of lattice points,
// over all keys with lambda <= cutoff (including singletons).
std::map<std::int64_t, std::int64_t> key_multiplicities(const TorusSpec& spec, double cutoff);

enum class GrowthModel { power_law, logarithmic };
std::string_view to_string(GrowthModel model);

struct DegeneracySample {
    double X = 0.0;
    std::int64_t count = 0;
    double normalized = 0.0;  // count / X
};

struct GrowthFit {
    GrowthModel model = GrowthModel::power_law;  // preferred model for this alpha
    double exponent = 0.0;                       // slope of log(normalized) vs log X
    double log_coefficient = 0.0;                // intercept of that fit
    double r_squared = 0.0;
    double loglog_exponent = 0.0;                // slope of log(normalized) vs log log X
    double loglog_r_squared = 0.0;
};

struct DegeneracyCurve {
    TorusSpec spec;
    std::vector<DegeneracySample> samples;
    double fitted_exponent = 0.0;
    double fitted_log_coefficient = 0.0;
};

DegeneracyCurve degeneracy_curve(const TorusSpec& spec, std::span<const double> Xs, Parallelism par = {});
GrowthFit growth_fit(const DegeneracyCurve& curve);

std::string degeneracy_csv_header();
std::vector<std::string> degeneracy_csv_rows(const DegeneracyCurve& curve, const GrowthFit& fit);

namespace serial {
std::vector<DegenerateGroup> degenerate_groups(const TorusSpec& spec, double X_max);
}

}  // namespace qtorus
