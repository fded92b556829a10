#pragma once

#include <cstdint>
#include <functional>

namespace imgbk {

// Worker cap: IMGBK_THREADS if set, else hardware concurrency (min 1).
int max_threads();

// Runs fn over [begin, end) split into contiguous chunks, one per worker.
// Each index is processed by exactly one worker, so writes to per-index
// output slots are race-free and results are bitwise independent of the
// worker count. Small ranges run inline.
void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace imgbk
