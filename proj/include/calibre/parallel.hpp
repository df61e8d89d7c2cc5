#pragma once

#include <cstddef>
#include <functional>

namespace calibre {

/// Worker count from CALIBRE_THREADS (0 or unset = hardware concurrency).
std::size_t thread_count();

/// Runs body(i) for i in [0, count) on up to thread_count() threads.
/// Callers write results into per-index slots, so output does not depend on
/// scheduling. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace calibre
