#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>
#include <exception>
#include <mutex>

#include <omp.h>

namespace qtorus {

// Worker-count hint. 0 means the OpenMP default.
struct Parallelism {
    int workers = 0;
};

inline int effective_workers(Parallelism par) {
    return par.workers > 0 ? par.workers : omp_get_max_threads();
}

// Runs body(c) for c in [0, n_chunks). Chunk boundaries are chosen by the
// caller and never depend on the worker count, so every kernel that reduces
// its per-chunk results in index order is bit-reproducible.
template <class Body>
void for_each_chunk(std::size_t n_chunks, Parallelism par, Body&& body) {
    if (n_chunks == 0) return;
    const int workers = effective_workers(par);
    if (workers <= 1 || n_chunks == 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) body(c);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const long long n = static_cast<long long>(n_chunks);
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (long long c = 0; c < n; ++c) {
        try {
            body(static_cast<std::size_t>(c));
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

inline std::size_t chunk_count(std::size_t n, std::size_t chunk) {
    return (n + chunk - 1) / chunk;
}

// Merges sorted runs pairwise, level by level. std::merge takes ties from
// the left run first, so the result equals a stable sort of the
// concatenation in run order.
template <class T, class Cmp>
std::vector<T> merge_sorted_runs(std::vector<std::vector<T>> runs, Cmp cmp, Parallelism par) {
    if (runs.empty()) return {};
    while (runs.size() > 1) {
        std::vector<std::vector<T>> next((runs.size() + 1) / 2);
        for_each_chunk(next.size(), par, [&](std::size_t i) {
            if (2 * i + 1 == runs.size()) {
                next[i] = std::move(runs[2 * i]);
                return;
            }
            auto& a = runs[2 * i];
            auto& b = runs[2 * i + 1];
            next[i].resize(a.size() + b.size());
            std::merge(a.begin(), a.end(), b.begin(), b.end(), next[i].begin(), cmp);
            std::vector<T>().swap(a);
            std::vector<T>().swap(b);
        });
        runs = std::move(next);
    }
    return std::move(runs[0]);
}

}  // namespace qtorus
