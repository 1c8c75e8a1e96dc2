#pragma once

#include <cstddef>
#include <functional>

namespace cutlocus {

// Thread count from an explicit request, else CUTLOCUS_THREADS, else hardware concurrency.
int resolve_threads(int requested);
void set_default_threads(int n);

// Runs fn(i) for i in [0, n). Each index is handled exactly once; callers write
// into preallocated slots so output order never depends on scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace cutlocus
