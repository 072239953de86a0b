#pragma once

#include <functional>

namespace geolap {

// Worker count for node-parallel loops, read from GEOLAPLACE_WORKERS and
// clamped to [1, 64]; defaults to 1 when unset.
int worker_count();

// Run task(0..count-1) on a small thread pool.  Results must be written to
// preallocated per-index slots; reductions happen after the join in a fixed
// order, so numeric output is independent of the worker count.  Exceptions
// are captured per index and the smallest-index one is rethrown.
void for_each_index(int count, const std::function<void(int)>& task);

}  // namespace geolap
