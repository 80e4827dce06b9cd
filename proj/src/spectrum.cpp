#include "qtorus/spectrum.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "qtorus/errors.hpp"
#include "qtorus/lattice.hpp"

namespace qtorus {

namespace {

struct Entry {
    double lam;
    std::int64_t key;
};

struct KeyPlan {
    bool exact = false;
    std::int64_t q = 1;
    double q2 = 1.0;
    std::vector<std::int64_t> scaled;  // q * alpha_j
};

KeyPlan make_plan(const TorusSpec& spec, double cutoff) {
    KeyPlan plan;
    if (!spec.fully_rational()) return plan;
    plan.exact = true;
    plan.q = spec.common_denominator();
    const double qd = static_cast<double>(plan.q);
    const double r = std::sqrt(cutoff) + 2.0;
    if (qd * qd * cutoff > 4503599627370496.0 /* 2^52 */ ||
        qd * qd * r * r * spec.k() > 4.0e18)
        throw ResourceExhausted("exact keys q^2 * cutoff do not fit in 52 bits");
    plan.q2 = qd * qd;
    for (int j = 0; j < spec.k(); ++j) {
        const Rational& a = *spec.exact_component(j);
        plan.scaled.push_back(a.num * (plan.q / a.den));
    }
    return plan;
}

void enumerate_slab(const TorusSpec& spec, const KeyPlan& plan, double cutoff, std::int64_t m0,
                    std::vector<Entry>& out) {
    const double bound = cutoff * (1.0 + 1e-12);
    const int k = spec.k();
    enumerate_ball_slab(spec.alpha(), bound, m0, [&](const std::int64_t* m, double sum) {
        if (plan.exact) {
            std::int64_t key = 0;
            for (int j = 0; j < k; ++j) {
                std::int64_t d = plan.q * m[j] - plan.scaled[j];
                key += d * d;
            }
            double lam = static_cast<double>(key) / plan.q2;
            if (lam <= cutoff) out.push_back(Entry{lam, key});
        } else if (sum <= cutoff) {
            out.push_back(Entry{sum, 0});
        }
    });
}

bool less_by_key(const Entry& a, const Entry& b) { return a.key < b.key; }
bool less_by_value(const Entry& a, const Entry& b) { return a.lam < b.lam; }

void check_budget(const TorusSpec& spec, double cutoff, std::size_t budget) {
    if (!(cutoff > 0.0) || !std::isfinite(cutoff))
        throw InvalidArgument("enumerate_spectrum: cutoff must be positive");
    if (predicted_count(spec.k(), cutoff) > static_cast<double>(budget))
        throw ResourceExhausted("enumerate_spectrum: predicted count " +
                                std::to_string(predicted_count(spec.k(), cutoff)) +
                                " exceeds memory budget " + std::to_string(budget));
}

SpectrumSlice finish(const TorusSpec& spec, double cutoff, const KeyPlan& plan,
                     const std::vector<Entry>& sorted) {
    SpectrumSlice slice{spec, cutoff, {}, {}, std::nullopt, plan.q};
    slice.lambdas.resize(sorted.size());
    slice.rescaled.resize(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        slice.lambdas[i] = sorted[i].lam;
        slice.rescaled[i] = rescale(sorted[i].lam, spec.k());
    }
    if (plan.exact) {
        std::vector<std::int64_t> keys(sorted.size());
        for (std::size_t i = 0; i < sorted.size(); ++i) keys[i] = sorted[i].key;
        slice.exact_keys = std::move(keys);
    }
    return slice;
}

}  // namespace

double rescale(double lambda, int k) {
    double x = 1.0;
    for (int i = 0; i < k / 2; ++i) x *= lambda;
    if (k % 2 == 1) x *= std::sqrt(lambda);
    return x;
}

double predicted_count(int k, double cutoff) {
    return unit_ball_volume(k) * std::pow(cutoff, 0.5 * k);
}

double SpectrumSlice::rescaled_cutoff() const { return rescale(cutoff, spec.k()); }

SpectrumSlice enumerate_spectrum(const TorusSpec& spec, double cutoff, const SpectrumOptions& opts) {
    check_budget(spec, cutoff, opts.memory_budget);
    const KeyPlan plan = make_plan(spec, cutoff);
    const SlabRange slabs = outer_slabs(spec.alpha()[0], cutoff * (1.0 + 1e-12));
    const auto cmp = plan.exact ? less_by_key : less_by_value;

    std::vector<std::vector<Entry>> runs(slabs.count());
    for_each_chunk(runs.size(), opts.par, [&](std::size_t s) {
        enumerate_slab(spec, plan, cutoff, slabs.first + static_cast<std::int64_t>(s), runs[s]);
        std::stable_sort(runs[s].begin(), runs[s].end(), cmp);
    });
    std::size_t total = 0;
    for (const auto& r : runs) total += r.size();
    if (total > opts.memory_budget) throw ResourceExhausted("enumerate_spectrum: memory budget exceeded");

    const std::vector<Entry> sorted = merge_sorted_runs(std::move(runs), cmp, opts.par);
    return finish(spec, cutoff, plan, sorted);
}

namespace serial {

SpectrumSlice enumerate_spectrum(const TorusSpec& spec, double cutoff, std::size_t memory_budget) {
    check_budget(spec, cutoff, memory_budget);
    const KeyPlan plan = make_plan(spec, cutoff);
    const SlabRange slabs = outer_slabs(spec.alpha()[0], cutoff * (1.0 + 1e-12));
    std::vector<Entry> all;
    for (std::int64_t m0 = slabs.first; m0 <= slabs.last; ++m0) enumerate_slab(spec, plan, cutoff, m0, all);
    if (all.size() > memory_budget) throw ResourceExhausted("enumerate_spectrum: memory budget exceeded");
    std::stable_sort(all.begin(), all.end(), plan.exact ? less_by_key : less_by_value);
    return finish(spec, cutoff, plan, all);
}

}  // namespace serial

double counting_ratio(const SpectrumSlice& slice, double X) {
    if (!(X > 0.0)) throw InvalidArgument("counting_ratio: X must be positive");
    if (X > slice.rescaled_cutoff() * (1.0 + 1e-12))
        throw InsufficientData("counting_ratio: X exceeds the enumerated range");
    auto it = std::upper_bound(slice.rescaled.begin(), slice.rescaled.end(), X);
    return static_cast<double>(it - slice.rescaled.begin()) / X;
}

// ---------------------------------------------------------------------------
// Binary cache: "QTSPECTR", u32 version, u32 k, k x f64 alpha,
// k x (u8 exact, i64 num, i64 den), f64 cutoff, u64 count, count x f64.
// All little-endian.

namespace {

constexpr char kMagic[8] = {'Q', 'T', 'S', 'P', 'E', 'C', 'T', 'R'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}
void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}
void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw InvalidArgument("spectrum cache truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}
std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw InvalidArgument("spectrum cache truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}
double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

}  // namespace

void write_spectrum_cache(const SpectrumSlice& slice, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw InvalidArgument("cannot open spectrum cache for writing: " + path.string());
    os.write(kMagic, sizeof kMagic);
    put_u32(os, kVersion);
    put_u32(os, static_cast<std::uint32_t>(slice.spec.k()));
    for (double a : slice.spec.alpha()) put_f64(os, a);
    for (const auto& e : slice.spec.exact_components()) {
        os.put(e ? 1 : 0);
        put_u64(os, static_cast<std::uint64_t>(e ? e->num : 0));
        put_u64(os, static_cast<std::uint64_t>(e ? e->den : 1));
    }
    put_f64(os, slice.cutoff);
    put_u64(os, slice.lambdas.size());
    for (double l : slice.lambdas) put_f64(os, l);
    if (!os) throw InvalidArgument("failed writing spectrum cache: " + path.string());
}

SpectrumSlice read_spectrum_cache(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidArgument("cannot open spectrum cache: " + path.string());
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        throw InvalidArgument("not a spectrum cache file: " + path.string());
    if (get_u32(is) != kVersion) throw InvalidArgument("unsupported spectrum cache version");
    const std::uint32_t k = get_u32(is);
    if (k < 2 || k > kMaxDimension) throw InvalidArgument("spectrum cache: bad dimension");
    std::vector<double> alpha(k);
    for (auto& a : alpha) a = get_f64(is);
    std::vector<std::optional<Rational>> exact(k);
    for (auto& e : exact) {
        char flag = 0;
        is.get(flag);
        auto num = static_cast<std::int64_t>(get_u64(is));
        auto den = static_cast<std::int64_t>(get_u64(is));
        if (flag) e = Rational{num, den};
    }
    TorusSpec spec(alpha, exact);
    const double cutoff = get_f64(is);
    const std::uint64_t count = get_u64(is);
    SpectrumSlice slice{spec, cutoff, {}, {}, std::nullopt, 1};
    slice.lambdas.resize(count);
    slice.rescaled.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        slice.lambdas[i] = get_f64(is);
        slice.rescaled[i] = rescale(slice.lambdas[i], spec.k());
    }
    if (spec.fully_rational()) {
        // lambda = key / q^2 correctly rounded with key < 2^52, so rounding
        // lambda * q^2 recovers the key.
        const KeyPlan plan = make_plan(spec, cutoff);
        slice.key_denominator = plan.q;
        std::vector<std::int64_t> keys(count);
        for (std::uint64_t i = 0; i < count; ++i)
            keys[i] = std::llround(slice.lambdas[i] * plan.q2);
        slice.exact_keys = std::move(keys);
    }
    return slice;
}

}  // namespace qtorus
