#pragma once
// parallel.hpp
// Minimal block-parallel loop. Work is split into contiguous index ranges,
// so any output written to disjoint per-index slots is deterministic
// regardless of thread count.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace usemetrics {

inline int effective_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Calls body(i) for i in [0, n). `threads <= 1` or tiny n runs inline.
template <typename Body>
void parallel_for(std::int64_t n, int threads, Body&& body) {
  threads = effective_threads(threads);
  if (threads <= 1 || n < 2 * threads) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  if (static_cast<std::int64_t>(threads) > n)
    threads = static_cast<int>(n);
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::int64_t chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    std::int64_t begin = t * chunk;
    std::int64_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::int64_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace usemetrics
