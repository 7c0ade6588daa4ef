#pragma once

#include <cstddef>
#include <functional>

namespace upcc {

/// Worker count from UPCC_THREADS (default 1).
std::size_t thread_count();

/// Runs body(i) for i in [0, n) over up to `threads` workers. Each index is
/// processed exactly once; callers write results into index-addressed slots
/// so the outcome is independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t threads = thread_count());

}  // namespace upcc
