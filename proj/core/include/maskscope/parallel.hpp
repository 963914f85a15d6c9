#pragma once

#include <cstddef>
#include <functional>

namespace maskscope {

// Worker count: MASKSCOPE_THREADS when set to a positive integer, otherwise
// the hardware concurrency (at least 1).
std::size_t worker_count();

// Runs body(i) for i in [0, n) over up to worker_count() threads. Indices are
// handed out in contiguous blocks. If any call throws, the exception raised
// by the lowest index is rethrown after all workers have joined, so failures
// are reported identically regardless of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace maskscope
