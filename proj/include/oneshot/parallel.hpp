#pragma once

#include <cstddef>
#include <functional>

namespace oneshot {

/// Worker count from ONESHOT_THREADS, defaulting to the hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [0, count) on up to `workers` threads (0 means
/// worker_count()). Callers write results into per-index slots, so reductions
/// stay ordered by index whatever the schedule. The first exception thrown by
/// any body is rethrown after all workers stop.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body, std::size_t workers = 0);

}  // namespace oneshot
