#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace inverspect {

namespace detail {

inline std::atomic<unsigned>& thread_cap()
{
    static std::atomic<unsigned> cap{0};
    return cap;
}

} // namespace detail

/// Caps the worker count used by the library; 0 means hardware concurrency.
inline void set_max_threads(unsigned n) { detail::thread_cap().store(n); }

inline unsigned max_threads()
{
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned cap = detail::thread_cap().load();
    return cap == 0 ? hw : std::min(cap, hw);
}

/// Runs fn(i) for i in [0, n). Each index writes only its own output, so the
/// results do not depend on the worker count. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn)
{
    const std::size_t workers = std::min<std::size_t>(max_threads(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto body = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

} // namespace inverspect
