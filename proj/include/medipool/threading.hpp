#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

// Deterministic-by-construction parallel loop. Work items write to
// pre-assigned slots and draw from their own random streams, so results are
// identical for any worker count. MEDIPOOL_THREADS caps the pool.

namespace medipool::par {

inline int max_threads() {
    static const int cached = [] {
        if (const char* env = std::getenv("MEDIPOOL_THREADS")) {
            const int v = std::atoi(env);
            if (v >= 1) return v;
        }
        const unsigned hc = std::thread::hardware_concurrency();
        return hc == 0 ? 1 : int(std::min(hc, 8u));
    }();
    return cached;
}

template <class F>
void parallel_for(std::size_t n, F&& body) {
    const std::size_t nthreads = std::min<std::size_t>(std::size_t(max_threads()), n);
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }

    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    workers.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
        workers.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += nthreads) body(i);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace medipool::par
