#pragma once

#include <cstddef>
#include <functional>

namespace cascade {

// Worker count from CASCADE_THREADS, else hardware concurrency. Always >= 1.
std::size_t thread_count();

// Runs body(i) for i in [0, n) over `threads` workers; each index is visited once.
// Results must be written to per-index slots so output never depends on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, std::size_t threads = thread_count());

}  // namespace cascade
