#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace preimage {

// Run fn(i) for i in [0, n) on up to `workers` threads (0 = use the hardware
// count). Tasks must be independent; results should go to preallocated slots
// so the outcome cannot depend on scheduling. The first exception thrown by
// any task is rethrown on the caller.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
    if (n == 0) return;
    if (workers == 0) workers = std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    workers = std::min(workers, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!err) err = std::current_exception();
                    failed.store(true);
                    return;
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace preimage
