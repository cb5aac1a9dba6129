#pragma once

// Slot parallelism: items are mapped into preassigned result slots with a
// static round-robin schedule and no cross-thread reductions, so the output
// is bitwise independent of the worker count. TILECRAFT_THREADS caps the
// worker count (default 1; hard cap 16).

#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace tilecraft {

inline int configured_thread_count() {
    const char* env = std::getenv("TILECRAFT_THREADS");
    if (env == nullptr || *env == '\0') return 1;
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end == env || v < 1) return 1;
    return int(v > 16 ? 16 : v);
}

// fn(i) must write only to state owned by item i
inline void slot_parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    int workers = configured_thread_count();
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::size_t w = std::size_t(workers) < count ? std::size_t(workers) : count;
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (std::size_t t = 0; t < w; ++t)
        pool.emplace_back([&, t]() {
            for (std::size_t i = t; i < count; i += w) fn(i);
        });
    for (auto& th : pool) th.join();
}

} // namespace tilecraft
