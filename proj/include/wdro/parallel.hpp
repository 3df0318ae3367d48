#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wdro {

/// Process-wide cap on worker threads used by the node maps. 0 means
/// "hardware concurrency".
inline std::atomic<unsigned>& max_threads()
{
    static std::atomic<unsigned> value{0};
    return value;
}

inline unsigned effective_threads()
{
    unsigned cap = max_threads().load();
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    return cap == 0 ? hw : std::min(cap, hw);
}

/**
 * Runs body(i) for i in [0, count) on up to effective_threads() workers.
 *
 * Work is split into contiguous static chunks, so each index is always
 * handled by the same code path and results do not depend on the worker
 * count. The body must not touch shared mutable state other than its own
 * output slot.
 */
template <typename Body>
void parallel_for(std::size_t count, Body&& body)
{
    const std::size_t workers =
        std::min<std::size_t>(effective_threads(), std::max<std::size_t>(count / 64, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }

    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (count + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        if (begin >= end) {
            break;
        }
        pool.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) {
                    body(i);
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

} // namespace wdro
