#ifndef TNRD_PARALLEL_HPP
#define TNRD_PARALLEL_HPP

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace tnrd {

inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(0..n-1) across workers. Each index is processed exactly once;
/// callers keep determinism by writing to per-index slots.
inline void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    workers = std::min(resolve_workers(workers), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : pool) t.join();
}

}  // namespace tnrd

#endif
