#include "ddcl/threadpool.hpp"

#include <atomic>
#include <mutex>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace ddcl {

namespace {

std::size_t resolve_default() {
    std::size_t n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (n > 8) n = 8;
    if (const char* env = std::getenv("DDCL_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) n = static_cast<std::size_t>(v);
    }
    return n;
}

std::atomic<std::size_t> g_workers{0};

} // namespace

std::size_t worker_count() {
    std::size_t n = g_workers.load(std::memory_order_relaxed);
    return n == 0 ? resolve_default() : n;
}

void set_worker_count(std::size_t n) { g_workers.store(n, std::memory_order_relaxed); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min(worker_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto run = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(n, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace ddcl
