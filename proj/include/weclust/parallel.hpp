#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace weclust {

namespace detail {
inline std::atomic<std::size_t>& thread_cap() {
    static std::atomic<std::size_t> cap{0};
    return cap;
}
}  // namespace detail

/// Upper bound on worker threads. 0 means "hardware concurrency".
inline void set_thread_count(std::size_t n) { detail::thread_cap() = n; }

inline std::size_t thread_count() {
    std::size_t cap = detail::thread_cap();
    if (cap == 0) cap = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    return cap;
}

/// Reads WECLUST_THREADS; leaves the current setting alone when unset or invalid.
inline void configure_threads_from_env() {
    const char* env = std::getenv("WECLUST_THREADS");
    if (env == nullptr) return;
    try {
        long v = std::stol(env);
        if (v > 0) set_thread_count(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
    }
}

/// Runs fn(i) for i in [0, n) over contiguous chunks. Callers write only to
/// slot i, so results do not depend on the thread count.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t min_chunk = 64) {
    std::size_t workers = std::min(thread_count(), (n + min_chunk - 1) / std::max<std::size_t>(1, min_chunk));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t begin = w * chunk;
        std::size_t end = std::min(n, begin + chunk);
        pool.emplace_back([&, w, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace weclust
