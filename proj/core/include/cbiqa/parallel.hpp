#pragma once

#include <cstddef>
#include <functional>

namespace cbiqa {

// Process-wide cap on worker threads. 0 means "all available cores".
// Initialized from CODEBOOK_IQA_THREADS on first use.
void set_thread_limit(std::size_t threads);
std::size_t thread_limit();

// Runs body(i) for i in [0, count) on up to thread_limit() threads. Each index
// must write only to its own output slot; results are then independent of the
// thread count. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace cbiqa
