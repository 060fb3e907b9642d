#pragma once

#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace maxquad {

/// Resolve a requested thread count: 0 means "use hardware concurrency".
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : int(hw);
}

/// Static-partition parallel loop over [0, n). Work items must be independent;
/// the partition is deterministic but results must not depend on it.
/// The first exception thrown by any worker is rethrown on the caller.
inline void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  threads = resolve_threads(threads);
  if (n <= 0) return;
  if (threads <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  threads = std::min(threads, n);
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  auto run_chunk = [&](int worker) {
    const int lo = int(int64_t(n) * worker / threads);
    const int hi = int(int64_t(n) * (worker + 1) / threads);
    try {
      for (int i = lo; i < hi; ++i) body(i);
    } catch (...) {
      errors[worker] = std::current_exception();
    }
  };
  for (int w = 1; w < threads; ++w) pool.emplace_back(run_chunk, w);
  run_chunk(0);
  for (auto& th : pool) th.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

}  // namespace maxquad
