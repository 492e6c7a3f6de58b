#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace spinlab {

// --threads / SPINLAB_THREADS / hardware default, in that order of priority
inline int default_threads() {
    if (const char* env = std::getenv("SPINLAB_THREADS")) {
        const int k = std::atoi(env);
        if (k >= 1) return k;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Static work pool over [0, count); each cell must be independent.  The first
// exception thrown by a cell is rethrown after all workers join.
inline void parallel_for(long count, const std::function<void(long)>& body,
                         int threads = 0) {
    if (threads <= 0) threads = default_threads();
    if (threads > count) threads = static_cast<int>(count);
    if (threads <= 1) {
        for (long i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                const long i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (std::thread& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace spinlab
