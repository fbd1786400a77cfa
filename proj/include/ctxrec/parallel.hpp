#pragma once

#include <cstddef>
#include <functional>

namespace ctxrec {

// Worker count from CTXREC_THREADS, falling back to hardware concurrency.
int default_threads();

// Runs fn(worker, begin, end) over contiguous blocks of [0, n), one block per
// worker. Callers are responsible for making the merged result independent of
// the partitioning.
void parallel_blocks(std::size_t n, int threads,
                     const std::function<void(std::size_t worker, std::size_t begin,
                                              std::size_t end)>& fn);

}  // namespace ctxrec
