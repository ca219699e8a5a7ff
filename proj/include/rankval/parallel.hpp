#pragma once

// Block-parallel loop over [0, n). Workers own disjoint index ranges and
// write to disjoint output slots, so results do not depend on scheduling.
// RANKVAL_THREADS caps the worker count (default: hardware concurrency).

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace rankval {

inline unsigned thread_budget() {
    if (const char* env = std::getenv("RANKVAL_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// fn(begin, end) is called on contiguous chunks covering [0, n).
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t min_chunk = 1024) {
    if (n == 0) return;
    const unsigned budget = thread_budget();
    const std::size_t max_workers = std::max<std::size_t>(1, n / std::max<std::size_t>(1, min_chunk));
    const std::size_t workers = std::min<std::size_t>(budget, max_workers);
    if (workers <= 1) {
        fn(std::size_t{0}, n);
        return;
    }
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t b = w * chunk;
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace rankval
