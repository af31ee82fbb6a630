#pragma once

#include <thread>
#include <vector>

namespace palmsim {

/// Index-partitioned parallel loop. Results must be written to preallocated
/// per-index slots so the outcome is identical for any thread count.
template <typename Fn>
void parallel_for(size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n < 2) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const size_t nt = std::min<size_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (size_t t = 0; t < nt; ++t) {
    pool.emplace_back([&, t] {
      for (size_t i = t; i < n; i += nt) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace palmsim
