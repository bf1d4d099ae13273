#pragma once

#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace attribkit {

inline int hardware_thread_count() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

// Thread count resolution: explicit request wins, then the ATTRIBKIT_THREADS
// environment variable, then hardware concurrency.
inline int resolve_thread_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("ATTRIBKIT_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    }
    return hardware_thread_count();
}

// Runs body(i) for i in [0, n). Workers own disjoint index blocks, so bodies
// that write to slot i need no synchronization and results are identical for
// any thread count. threads < 1 means "auto" (ATTRIBKIT_THREADS, then
// hardware). The first exception thrown by a worker is rethrown here.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
    if (n == 0) return;
    const int resolved = threads > 0 ? threads : resolve_thread_count(0);
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(resolved), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }

    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = n * w / workers;
        const std::size_t end = n * (w + 1) / workers;
        pool.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace attribkit
