#pragma once

#include <cstddef>
#include <functional>

namespace vitalspec {

/// VITALSPEC_THREADS if set to a positive integer, else hardware concurrency (>= 1).
std::size_t worker_count();

/// Calls fn(i) for i in [0, n) on up to worker_count() threads. The first
/// exception thrown by any call is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace vitalspec
