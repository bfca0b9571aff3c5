// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace finsep {

// Worker count: hardware concurrency capped by the FINSEP_THREADS
// environment variable (and by the job count).
int worker_count(int64_t jobs);

// Runs fn(i) for i in [0, n). Iterations must be independent; results keyed
// by index are identical for any thread count.
void parallel_for(int64_t n, const std::function<void(int64_t)>& fn);

}  // namespace finsep
