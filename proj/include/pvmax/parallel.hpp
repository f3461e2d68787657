// Deterministic fork-join helpers. Work is split into fixed-size chunks so
// reductions combine partial results in the same order for any worker count.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace pvmax {

namespace detail {
inline std::atomic<unsigned>& worker_setting() {
    static std::atomic<unsigned> workers{0};
    return workers;
}
}  // namespace detail

/// Number of worker threads used by parallel_for. 0 means "not set":
/// PVMAX_WORKERS is consulted, then hardware_concurrency.
inline unsigned worker_count() {
    unsigned w = detail::worker_setting().load();
    if (w != 0) return w;
    if (const char* env = std::getenv("PVMAX_WORKERS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

inline void set_worker_count(unsigned workers) { detail::worker_setting().store(workers); }

/// Calls body(chunk_begin, chunk_end, chunk_index) for consecutive chunks of
/// [0, n). Chunks are handed out dynamically; any exception is rethrown on
/// the calling thread after all workers stop.
template <class Body>
void parallel_chunks(std::size_t n, std::size_t chunk, Body&& body) {
    if (n == 0) return;
    chunk = std::max<std::size_t>(1, chunk);
    const std::size_t chunks = (n + chunk - 1) / chunk;
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), chunks));
    auto run_chunk = [&](std::size_t c) { body(c * chunk, std::min(n, (c + 1) * chunk), c); };
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            std::size_t c = next.fetch_add(1);
            if (c >= chunks) return;
            try {
                run_chunk(c);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(chunks);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (unsigned t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// body(i) for every i in [0, n); body must only write to slot i.
template <class Body>
void parallel_for(std::size_t n, Body&& body, std::size_t chunk = 64) {
    parallel_chunks(n, chunk, [&](std::size_t b, std::size_t e, std::size_t) {
        for (std::size_t i = b; i < e; ++i) body(i);
    });
}

/// Ordered reduction: each chunk folds its indices left to right, then the
/// chunk partials are folded in chunk order. Bit-stable across worker counts.
template <class T, class Map, class Combine>
T parallel_reduce(std::size_t n, T init, Map&& map, Combine&& combine, std::size_t chunk = 1024) {
    const std::size_t chunks = n == 0 ? 0 : (n + chunk - 1) / chunk;
    std::vector<T> partial(chunks, init);
    parallel_chunks(n, chunk, [&](std::size_t b, std::size_t e, std::size_t c) {
        T acc = init;
        for (std::size_t i = b; i < e; ++i) acc = combine(acc, map(i));
        partial[c] = acc;
    });
    T acc = init;
    for (const T& p : partial) acc = combine(acc, p);
    return acc;
}

}  // namespace pvmax
