#pragma once

#include <cstddef>
#include <functional>

namespace twpa {

/// Runs fn(i) for i in [0, n) on up to `threads` worker threads. Exceptions
/// thrown by fn are rethrown (the first one, by index) after all workers join.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace twpa
