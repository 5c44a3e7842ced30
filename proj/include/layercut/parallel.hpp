#pragma once

#include <cstddef>
#include <functional>

namespace layercut {

/// Resolves a requested worker count: 0 means hardware concurrency.
unsigned resolve_threads(unsigned requested) noexcept;

/// Runs task(i) for i in [0, count) on up to `threads` workers. Tasks must
/// write only to their own output slots. If tasks throw, the exception of
/// the lowest failing index is rethrown after all workers finish, so the
/// reported error does not depend on scheduling.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& task);

}  // namespace layercut
