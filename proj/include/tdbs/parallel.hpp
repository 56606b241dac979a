#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace tdbs {

/// Runs body(i) for i in [0, n) across up to `threads` workers.
/// threads == 0 means hardware concurrency. Results must be written to
/// pre-sized slots indexed by i so the outcome is thread-count
/// independent.
template <class F>
void parallel_for(std::size_t n, F&& body, unsigned threads = 0) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    pool.emplace_back([&body, begin, end] {
      for (std::size_t i = begin; i < end; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace tdbs
