// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cfr {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Results are written
/// by index, so output order never depends on completion order. The first
/// exception thrown by any task is rethrown after all workers join.
template <typename Fn>
void parallel_for_index(std::size_t n, int workers, Fn&& fn) {
    const auto threads = static_cast<std::size_t>(std::max(1, workers));
    if (threads == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto body = [&] {
        for (;;) {
            const auto i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!error) error = std::current_exception();
                next.store(n);
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(body);
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace cfr
