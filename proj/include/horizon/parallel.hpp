#pragma once

// Fixed-block fan-out. Work is always cut into the same blocks regardless of
// the thread count, and reductions combine per-block partials in block order,
// so results are bit-identical for any number of workers.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace horizon {

inline constexpr std::size_t kPathBlock = 1024;

inline std::size_t block_count(std::size_t n, std::size_t block = kPathBlock) {
  return (n + block - 1) / block;
}

class Executor {
 public:
  explicit Executor(unsigned threads = 1) : threads_(std::max(1u, threads)) {}

  unsigned threads() const noexcept { return threads_; }

  // Calls fn(b) for every b in [0, n_blocks). Exceptions are rethrown from
  // the lowest failing block.
  template <class Fn>
  void for_blocks(std::size_t n_blocks, Fn&& fn) const {
    const std::size_t workers =
        std::min<std::size_t>(threads_, n_blocks == 0 ? 1 : n_blocks);
    if (workers <= 1) {
      for (std::size_t b = 0; b < n_blocks; ++b) fn(b);
      return;
    }
    std::vector<std::exception_ptr> errors(n_blocks);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (;;) {
        const std::size_t b = next.fetch_add(1);
        if (b >= n_blocks) return;
        try {
          fn(b);
        } catch (...) {
          errors[b] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  // Per-path loop over [0, n) in fixed blocks.
  template <class Fn>
  void for_paths(std::size_t n, Fn&& fn) const {
    for_blocks(block_count(n), [&](std::size_t b) {
      const std::size_t lo = b * kPathBlock;
      const std::size_t hi = std::min(n, lo + kPathBlock);
      for (std::size_t p = lo; p < hi; ++p) fn(p);
    });
  }

 private:
  unsigned threads_;
};

}  // namespace horizon
