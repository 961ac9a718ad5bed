#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace refractor {

namespace detail {
inline std::atomic<unsigned>& worker_setting() {
    static std::atomic<unsigned> n{1};
    return n;
}
}  // namespace detail

/// Worker count for node loops. 0 means one worker per hardware thread.
inline void set_worker_count(unsigned n) { detail::worker_setting().store(n); }

inline unsigned worker_count() {
    unsigned n = detail::worker_setting().load();
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

/// Reads REFRACTOR_THREADS; unset or unparsable leaves the current setting.
inline void configure_workers_from_env() {
    if (const char* s = std::getenv("REFRACTOR_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(s, &end, 10);
        if (end != s && v >= 0) set_worker_count(static_cast<unsigned>(v));
    }
}

/// Fixed-size blocks keep every reduction order independent of the worker count.
inline constexpr std::size_t kBlockSize = 4096;

/// Calls body(begin, end, block) for each block of [0, n). Blocks are
/// distributed over workers; callers reduce per-block results in block order.
template <class Body>
void for_each_block(std::size_t n, Body&& body) {
    const std::size_t blocks = (n + kBlockSize - 1) / kBlockSize;
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), blocks));
    auto run = [&](std::size_t b) {
        const std::size_t begin = b * kBlockSize;
        body(begin, std::min(n, begin + kBlockSize), b);
    };
    if (workers <= 1) {
        for (std::size_t b = 0; b < blocks; ++b) run(b);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            try {
                for (std::size_t b = next++; b < blocks; b = next++) run(b);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace refractor
