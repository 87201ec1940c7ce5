#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pebble {

inline int hardwareThreads() {
    unsigned n = std::thread::hardware_concurrency();
    return n > 0 ? static_cast<int>(n) : 1;
}

// Runs fn(blockIndex) for blockIndex in [0, blockCount). The block
// decomposition is fixed by the caller, so as long as blocks touch disjoint
// state (or results are merged in block order afterwards) the outcome is
// identical for every thread count, including 1.
template <typename Fn>
void parallelBlocks(int blockCount, int threads, Fn&& fn) {
    if (blockCount <= 0) return;
    if (threads <= 1 || blockCount == 1) {
        for (int b = 0; b < blockCount; ++b) fn(b);
        return;
    }
    int workers = std::min(threads, blockCount);
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex errorMutex;
    auto body = [&]() {
        for (;;) {
            int b = next.fetch_add(1, std::memory_order_relaxed);
            if (b >= blockCount) return;
            try {
                fn(b);
            } catch (...) {
                std::lock_guard<std::mutex> lock(errorMutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int i = 1; i < workers; ++i) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// Row-sliced loop over [0, count) with a fixed chunk size; fn(begin, end).
template <typename Fn>
void parallelChunks(int count, int chunk, int threads, Fn&& fn) {
    if (count <= 0) return;
    int blocks = (count + chunk - 1) / chunk;
    parallelBlocks(blocks, threads, [&](int b) {
        int begin = b * chunk;
        int end = std::min(count, begin + chunk);
        fn(begin, end);
    });
}

}  // namespace pebble
