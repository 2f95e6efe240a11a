#pragma once

#include <cstddef>
#include <functional>

namespace lne {

/// Worker count used when a caller passes 0: the LNE_WORKERS environment
/// variable when it parses as a positive integer, otherwise the hardware
/// concurrency, and at least 1.
std::size_t default_worker_count();

/// Runs job(i) for i in [0, count) across `workers` threads (0 = default).
/// Jobs are dispatched through a shared atomic counter, so the assignment of
/// indices to threads varies between runs -- jobs must not communicate
/// through shared state other than writing to their own slot. The first
/// exception thrown by any job is rethrown on the calling thread after all
/// workers stop. workers == 1 runs everything inline.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& job);

}  // namespace lne
