#pragma once

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace spenc {

// Worker cap from SPENC_THREADS; defaults to the hardware count.
inline int thread_budget() {
  if (const char* env = std::getenv("SPENC_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return static_cast<int>(n);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(block_index, begin, end) over fixed-size blocks of [0, n).
// Block boundaries do not depend on the thread count, so callers that keep
// one partial result per block and reduce in block order get identical
// answers at any SPENC_THREADS setting.
template <typename Fn>
void for_blocks(long n, long block_size, Fn&& fn) {
  if (n <= 0) return;
  const long n_blocks = (n + block_size - 1) / block_size;
  const int workers =
      static_cast<int>(std::min<long>(thread_budget(), n_blocks));
  if (workers <= 1) {
    for (long b = 0; b < n_blocks; ++b) {
      fn(b, b * block_size, std::min(n, (b + 1) * block_size));
    }
    return;
  }
  std::atomic<long> next{0};
  auto work = [&] {
    for (;;) {
      const long b = next.fetch_add(1);
      if (b >= n_blocks) return;
      fn(b, b * block_size, std::min(n, (b + 1) * block_size));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (int t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
}

}  // namespace spenc
