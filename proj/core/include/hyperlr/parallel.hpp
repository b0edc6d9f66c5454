#pragma once

// Index-parallel loop. Work items write to their own slot; callers reduce in
// index order afterwards, so results do not depend on the worker count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hyperlr {

/// Worker count: HYPERLR_WORKERS if set, else hardware concurrency.
inline int default_workers() {
  if (const char* env = std::getenv("HYPERLR_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Process-wide override used by the runner's --workers flag (0 = default).
inline std::atomic<int>& worker_override() {
  static std::atomic<int> n{0};
  return n;
}

inline int active_workers() {
  const int o = worker_override().load();
  return o > 0 ? o : default_workers();
}

/// Runs body(i) for i in [0, n). The first exception is rethrown after all workers stop.
template <class Body>
void parallel_for(std::size_t n, Body&& body, int workers = 0) {
  if (workers <= 0) workers = active_workers();
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(w - 1);
  for (std::size_t k = 0; k + 1 < w; ++k) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace hyperlr
