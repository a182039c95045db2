#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ergavg {

/// Degree of parallelism. Results never depend on it: work is split into
/// fixed-size blocks whose seeds derive from the block index, and partial
/// results are reduced in block order.
struct ExecPolicy {
  unsigned threads = 1;
};

/// Fixed Monte Carlo block size; part of the reproducibility contract.
inline constexpr std::size_t kMonteCarloBlock = 1024;

inline std::size_t block_count(std::size_t n, std::size_t block = kMonteCarloBlock) {
  return (n + block - 1) / block;
}

/// Calls fn(b) for every b in [0, blocks). Each block must write only its own slot.
template <class Fn>
void for_each_block(std::size_t blocks, const ExecPolicy& exec, Fn&& fn) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, exec.threads), blocks));
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) fn(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= blocks) return;
      try {
        fn(b);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(blocks);
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace ergavg
