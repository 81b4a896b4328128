#pragma once

#include <cstddef>
#include <functional>

namespace smallball {

// Worker count: SMALLBALL_WORKERS if set and positive, else hardware concurrency.
int worker_count();
// Overrides the environment for the current process (0 restores the default).
void set_worker_count(int workers);

// Runs body(i) for i in [0, n). Every index owns its output slot, so results never
// depend on the number of workers or on scheduling. Exceptions from the body are
// rethrown on the calling thread (the one with the smallest index wins).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace smallball
