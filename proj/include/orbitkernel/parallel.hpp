#pragma once

#include <cstddef>
#include <functional>

namespace orbitkernel {

/// Worker count: hardware concurrency, capped by ORBITKERNEL_THREADS when set.
unsigned resolve_thread_count();

/// Split [0, n) into contiguous chunks and run body(begin, end) on worker threads.
/// Each index is visited exactly once; chunk boundaries do not depend on timing.
void parallel_for_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

} // namespace orbitkernel
