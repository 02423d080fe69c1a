#pragma once

#include <cstddef>
#include <functional>

namespace slowfast {

// Thread count from SLOWFAST_THREADS, else hardware concurrency (at least 1).
std::size_t default_parallelism();

// Runs body(i) for i in [0, n) on up to `threads` workers. Work is handed out
// dynamically; callers write results by index so output is schedule-free.
// The first exception thrown by any body is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace slowfast
