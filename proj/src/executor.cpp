#include "crcsim/executor.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace crcsim {

Executor::Executor(int workers) : workers_(workers) {
    if (workers < 1) throw std::invalid_argument("Executor: workers must be >= 1");
}

std::int64_t Executor::block_count(std::int64_t n_items, std::int64_t block_size) {
    if (n_items <= 0) return 0;
    return (n_items + block_size - 1) / block_size;
}

void Executor::run_blocks(
    std::int64_t n_items, std::int64_t block_size,
    const std::function<void(std::int64_t, std::int64_t, std::int64_t)>& fn) const {
    if (block_size < 1) throw std::invalid_argument("Executor: block_size must be >= 1");
    const std::int64_t n_blocks = block_count(n_items, block_size);
    if (n_blocks == 0) return;

    auto run_block = [&](std::int64_t b) {
        const std::int64_t lo = b * block_size;
        const std::int64_t hi = std::min(n_items, lo + block_size);
        fn(b, lo, hi);
    };

    if (workers_ == 1 || n_blocks == 1) {
        for (std::int64_t b = 0; b < n_blocks; ++b) run_block(b);
        return;
    }

    std::atomic<std::int64_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::int64_t b = next.fetch_add(1, std::memory_order_relaxed);
            if (b >= n_blocks) return;
            try {
                run_block(b);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };

    const int n_threads = static_cast<int>(std::min<std::int64_t>(workers_, n_blocks));
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

const Executor& Executor::sequential() {
    static const Executor inline_exec(1);
    return inline_exec;
}

}  // namespace crcsim
