#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace bbm {

/// Number of worker threads: explicit request, else BBM_THREADS, else
/// hardware concurrency.
int resolve_threads(int requested);

/// Applies fn(replicate) for replicate in [0, count) on a static thread
/// partition. Each replicate must write only to its own result slot and
/// derive randomness from its own (seed, replicate) stream, which makes
/// the outcome identical for any thread count.
void parallel_replicates(std::size_t count, int threads,
                         const std::function<void(std::size_t)>& fn);

}  // namespace bbm
