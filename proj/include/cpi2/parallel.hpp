#pragma once

#include <cstddef>
#include <functional>

namespace cpi2 {

/// Runs fn(i) for i in [0, n) on up to `threads` workers with static
/// contiguous partitioning. Each index must write only to its own output
/// slot; with that discipline results are identical to the serial loop.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace cpi2
