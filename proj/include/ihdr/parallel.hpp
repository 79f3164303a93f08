#pragma once

#include <cstddef>
#include <functional>

namespace ihdr {

/// Caps the number of worker threads used by row-parallel image kernels.
/// 0 restores the default (hardware concurrency).
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs body(begin, end) over contiguous chunks of [0, n). Each index is
/// visited exactly once, so results never depend on the thread count as long
/// as body writes only to the rows it was handed.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace ihdr
