#pragma once

#include <cstdint>
#include <functional>

namespace crcsim {

/// Fixed-partition worker pool. Work is split into blocks whose boundaries
/// depend only on (n_items, block_size), never on the worker count; blocks are
/// claimed dynamically but every block writes to its own output slot, so
/// results are identical for any number of workers. Exceptions thrown by
/// block functions are rethrown on the calling thread (first one wins).
class Executor {
public:
    explicit Executor(int workers);

    int workers() const { return workers_; }

    /// Runs fn(block_index, lo, hi) over the half-open item ranges [lo, hi).
    void run_blocks(std::int64_t n_items, std::int64_t block_size,
                    const std::function<void(std::int64_t, std::int64_t, std::int64_t)>& fn) const;

    static std::int64_t block_count(std::int64_t n_items, std::int64_t block_size);

    /// Inline executor for nested calls from code that is already parallel.
    static const Executor& sequential();

private:
    int workers_;
};

}  // namespace crcsim
