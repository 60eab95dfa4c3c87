#pragma once

#include <cstddef>
#include <functional>

namespace ecsk {

/// Worker count used by parallel_for. Defaults to the hardware concurrency.
unsigned thread_count();
void set_thread_count(unsigned n);

/// Splits [0, n) into contiguous chunks, one per worker, and calls
/// body(begin, end) on each. Chunk boundaries depend only on n and the
/// worker count, so results are reproducible when body writes disjoint
/// outputs.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace ecsk
