#pragma once

#include <cstddef>
#include <functional>

namespace permchol {

/// Worker count from PERMCHOL_THREADS, else hardware concurrency (>= 1).
int default_thread_count();

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index
/// runs exactly once; callers write results into per-index slots and reduce
/// afterwards, so the outcome does not depend on `threads`. The first
/// exception thrown by any body is rethrown after all workers stop.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace permchol
