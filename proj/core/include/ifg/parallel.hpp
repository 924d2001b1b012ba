#pragma once

#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace ifg {

// Runs fn(i) for i in [0, n) across up to `threads` workers with a static
// contiguous partition. Work items must not share mutable state; any result
// aggregation happens after the join, in index order, so the outcome is
// identical for every thread count. The first exception (lowest worker index)
// is rethrown on the caller's thread.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    if (threads < 1) threads = 1;
    if (threads > n) threads = n;
    if (threads == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        int lo = static_cast<int>(static_cast<long long>(n) * t / threads);
        int hi = static_cast<int>(static_cast<long long>(n) * (t + 1) / threads);
        pool.emplace_back([lo, hi, t, &fn, &errors] {
            try {
                for (int i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace ifg
