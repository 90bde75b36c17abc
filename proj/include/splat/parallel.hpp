#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace splat {

// Runs fn(begin..end) split into contiguous chunks across num_threads
// scoped threads. With num_threads <= 1 the call runs inline. Results must
// not depend on chunk boundaries — callers that accumulate use per-chunk
// buffers merged in a fixed order afterwards.
inline void parallel_for(int begin, int end, int num_threads,
                         const std::function<void(int, int)>& fn) {
    const int n = end - begin;
    if (n <= 0) return;
    if (num_threads <= 1 || n == 1) {
        fn(begin, end);
        return;
    }
    const int workers = std::min(num_threads, n);
    const int chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        const int lo = begin + w * chunk;
        const int hi = std::min(lo + chunk, end);
        if (lo >= hi) break;
        pool.emplace_back(fn, lo, hi);
    }
    for (auto& t : pool) t.join();
}

}  // namespace splat
