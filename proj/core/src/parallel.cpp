#include "beamlab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace beamlab {

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("BEAMLAB_WORKERS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(size_t n, const std::function<void(size_t)>& task, int workers) {
  const size_t nw = std::min(n, static_cast<size_t>(resolve_workers(workers)));
  std::mutex mu;
  std::exception_ptr first;
  size_t first_index = n;
  auto guarded = [&](size_t i) {
    try {
      task(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (i < first_index) first_index = i, first = std::current_exception();
    }
  };
  if (nw <= 1) {
    for (size_t i = 0; i < n; ++i) guarded(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (size_t w = 0; w < nw; ++w)
      pool.emplace_back([&] {
        for (size_t i = next++; i < n; i = next++) guarded(i);
      });
    for (auto& t : pool) t.join();
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace beamlab
