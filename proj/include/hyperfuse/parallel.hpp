#ifndef HYPERFUSE_PARALLEL_HPP
#define HYPERFUSE_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace hyperfuse {

/// Static-partition parallel loop over [0, n). Each worker gets one
/// contiguous range, so any per-element output is identical to the serial
/// run regardless of the thread count.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t begin, std::size_t end)>& body);

/// Resolve a worker count: explicit request wins, then HYPERFUSE_THREADS,
/// then 1.
unsigned resolve_threads(unsigned requested);

}  // namespace hyperfuse

#endif
