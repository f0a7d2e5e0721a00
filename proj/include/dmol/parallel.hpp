// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

namespace dmol {

// Worker cap: DMOL_THREADS when set to a positive integer, otherwise the
// hardware concurrency. Always at least 1. Read per call so tests can toggle
// the environment.
int worker_count();

// Runs fn(0) .. fn(count-1), possibly across threads. fn must confine its
// writes to per-index slots; the first exception thrown by any index is
// rethrown on the caller after all workers finish.
void parallel_for(int count, const std::function<void(int)>& fn);

}  // namespace dmol
