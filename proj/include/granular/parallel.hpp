#pragma once

// Deterministic block parallelism: work is cut into a fixed number of blocks
// independent of the thread count, so reductions merged in block order are
// bit-identical for any number of workers.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace granular {

inline int default_thread_count() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs fn(block) for block in [0, blocks) on up to `threads` workers.
template <class Fn>
void parallel_blocks(std::size_t blocks, int threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(blocks, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) fn(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= blocks || failed.load()) return;
      try {
        fn(b);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

/// Half-open range of block b when [0, n) is cut into `blocks` pieces.
inline std::pair<std::size_t, std::size_t> block_range(std::size_t n, std::size_t blocks, std::size_t b) {
  const std::size_t lo = n * b / blocks;
  const std::size_t hi = n * (b + 1) / blocks;
  return {lo, hi};
}

}  // namespace granular
