#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "qtorus/core_types.hpp"
#include "qtorus/parallel.hpp"

namespace qtorus {

struct SpectrumOptions {
    std::size_t memory_budget = 200'000'000;  // entries
    Parallelism par{};
};

struct SpectrumSlice {
    TorusSpec spec;
    double cutoff = 0.0;
    std::vector<double> lambdas;   // nondecreasing
    std::vector<double> rescaled;  // lambda^{k/2}
    // q^2 * lambda as integers, present for fully rational alpha.
    std::optional<std::vector<std::int64_t>> exact_keys;
    std::int64_t key_denominator = 1;  // q

    std::size_t size() const { return lambdas.size(); }
    // All X_j up to this bound are present.
    double rescaled_cutoff() const;
};

double rescale(double lambda, int k);
double predicted_count(int k, double cutoff);

SpectrumSlice enumerate_spectrum(const TorusSpec& spec, double cutoff, const SpectrumOptions& opts = {});

// #{X_j <= X} / X
double counting_ratio(const SpectrumSlice& slice, double X);

void write_spectrum_cache(const SpectrumSlice& slice, const std::filesystem::path& path);
SpectrumSlice read_spectrum_cache(const std::filesystem::path& path);

namespace serial {
// Reference: slabs in order, one global stable sort.
SpectrumSlice enumerate_spectrum(const TorusSpec& spec, double cutoff,
                                 std::size_t memory_budget = 200'000'000);
}

}  // namespace qtorus
