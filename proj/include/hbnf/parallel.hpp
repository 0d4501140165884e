#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hbnf {

/// Number of workers used by the block-parallel scans. Never zero.
inline unsigned worker_count() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

/// Runs body(block_index) for block_index in [0, n_blocks) on a bounded pool.
/// Results must be written to per-block slots by the caller and merged in
/// block order afterwards, which keeps reductions deterministic.
template <class Body>
void parallel_blocks(std::size_t n_blocks, Body&& body) {
    const std::size_t workers = std::min<std::size_t>(worker_count(), n_blocks);
    if (workers <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) body(b);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t b = w; b < n_blocks; b += workers) body(b);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace hbnf
