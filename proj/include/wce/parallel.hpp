#pragma once

#include <cstddef>
#include <functional>

namespace wce {

/// Worker count used by row-parallel stages. Defaults to 1; 0 selects the
/// hardware concurrency.
void set_thread_count(std::size_t threads);
std::size_t thread_count();

/// Calls fn(begin, end) over disjoint contiguous chunks of [0, n). Each
/// index is processed exactly once; results written per index are
/// independent of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace wce
