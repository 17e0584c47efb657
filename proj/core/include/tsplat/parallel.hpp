#pragma once

#include <cstddef>
#include <functional>

namespace tsplat {

/// Worker count: `requested` if positive, else TSPLAT_THREADS, else hardware concurrency.
int worker_count(int requested = 0);

/// Runs fn(i) for i in [0, n) across up to `threads` workers. Each index runs exactly once;
/// the first exception thrown by any worker is rethrown on the caller.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace tsplat
