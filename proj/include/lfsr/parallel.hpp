#pragma once

#include <cstddef>
#include <functional>

namespace lfsr {

/// Caps worker threads used by parallel_for. 1 means strictly serial.
void set_thread_count(int threads);
int thread_count();

/// Runs body(i) for i in [0, n). Iterations must write disjoint outputs;
/// results are independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace lfsr
