#pragma once

#include <cstddef>
#include <functional>

namespace polyrep {

/// Worker count for data-parallel loops. Honors the POLYREP_THREADS
/// environment variable (a positive value pins the count, 0 or unset picks
/// the hardware concurrency).
int workerCount();

/// Runs fn(0) .. fn(n-1) across workerCount() threads. Each index is
/// executed exactly once; callers keep determinism by writing only to
/// per-index slots. The first exception thrown by any worker is rethrown.
void parallelFor(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace polyrep
