#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace biokey {

// Static block partition of [0, n) over `threads` workers. Work items
// must be independent; callers that need determinism write results into
// per-item slots so the outcome does not depend on the worker count.
template <typename Fn>
inline void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace biokey
