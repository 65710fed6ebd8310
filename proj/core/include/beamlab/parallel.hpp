#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace beamlab {

// Worker count: explicit value if positive, else BEAMLAB_WORKERS, else hardware concurrency.
int resolve_workers(int requested = 0);

// Runs task(i) for i in [0, n) on up to `workers` threads. Exceptions are rethrown
// (the one with the smallest index wins) after all threads have joined.
void parallel_for(size_t n, const std::function<void(size_t)>& task, int workers = 0);

template <class T>
std::vector<T> parallel_map(size_t n, const std::function<T(size_t)>& fn, int workers = 0) {
  std::vector<T> out(n);
  parallel_for(n, [&](size_t i) { out[i] = fn(i); }, workers);
  return out;
}

}  // namespace beamlab
