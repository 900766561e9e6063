#pragma once

#include <cstddef>
#include <functional>

namespace covwalk {

/// Worker count from COVWALK_THREADS (integer >= 1), else the hardware
/// concurrency. Throws ConfigError on a malformed value.
int worker_count();

/// Calls task(k) for k in [0, count) on worker_count() threads. Tasks must
/// write only to their own slot; the first exception is rethrown after all
/// workers stop.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task, int threads = 0);

}  // namespace covwalk
