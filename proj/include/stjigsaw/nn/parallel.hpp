#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace stj::nn {

/// Number of worker threads used for batch-parallel kernels. 0 = hardware
/// concurrency. Set once at startup (not thread-safe against running work).
inline int& worker_threads() {
  static int n = 0;
  return n;
}

inline int effective_workers(int items) {
  int n = worker_threads();
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  return std::min(n, std::max(items, 1));
}

/// Runs fn(chunk, begin, end) over [0, items) split into contiguous chunks,
/// one per worker. Chunk boundaries depend only on (items, workers), so any
/// per-chunk accumulation reduced in chunk order is deterministic.
template <typename Fn>
void parallel_chunks(int items, Fn&& fn) {
  const int workers = effective_workers(items);
  if (items <= 0) return;
  if (workers == 1) {
    fn(0, 0, items);
    return;
  }
  const int base = items / workers, extra = items % workers;
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers) - 1);
  int begin = 0;
  for (int c = 0; c < workers; ++c) {
    const int len = base + (c < extra ? 1 : 0);
    const int end = begin + len;
    if (c == workers - 1) {
      fn(c, begin, end);
    } else {
      threads.emplace_back([&fn, c, begin, end]() { fn(c, begin, end); });
    }
    begin = end;
  }
  for (auto& t : threads) t.join();
}

}  // namespace stj::nn
