#pragma once

#include <cstddef>
#include <functional>

namespace tailstab {

/// Resolve a requested worker count: 0 means "TAILSTAB_THREADS or 1".
unsigned resolve_threads(unsigned requested);

/// Run body(begin, end) over static contiguous chunks of [0, n).
/// Chunk boundaries do not affect results as long as body writes only to
/// indices inside its own range; exceptions are rethrown on the caller.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace tailstab
