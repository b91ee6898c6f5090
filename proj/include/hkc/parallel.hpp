#pragma once

// Static-partition parallel loop. Each index writes its own slot; any reduction
// happens afterwards in index order, so results do not depend on thread count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hkc {

inline std::atomic<int>& thread_limit() {
    static std::atomic<int> limit{0};  // 0: hardware concurrency
    return limit;
}

inline void set_thread_count(int n) { thread_limit() = std::max(0, n); }

inline int effective_threads() {
    const int lim = thread_limit();
    const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    return lim > 0 ? lim : hw;
}

template <class F>
void parallel_for(std::size_t n, F&& body) {
    const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(effective_threads()), n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            const std::size_t lo = n * t / threads, hi = n * (t + 1) / threads;
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace hkc
