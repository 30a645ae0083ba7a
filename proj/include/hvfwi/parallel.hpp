#pragma once

#include <functional>

namespace hvfwi {

/// Worker cap for data-parallel loops. 0 picks hardware concurrency.
/// Initialized from the FWI_THREADS environment variable.
void set_worker_threads(int n);
int worker_threads();

/// Runs fn(i) for i in [0, n) on up to worker_threads() threads.
/// Exceptions from workers are rethrown on the calling thread.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace hvfwi
