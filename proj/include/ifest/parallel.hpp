#pragma once

#include <cstddef>
#include <functional>

namespace ifest {

// Worker cap from IFEST_THREADS (0 or unset = hardware concurrency).
int thread_budget();

// Runs fn(0..count-1) across at most `workers` threads. Tasks must write
// results into caller-owned slots keyed by index; with that discipline the
// output is identical for any worker count.
void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace ifest
