#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace pdpc {

/// Worker count from the PDPC_WORKERS environment variable, else hardware
/// concurrency. Always >= 1.
unsigned default_workers();

/// Runs fn(i) for every i in [0, n) on up to `workers` threads. Each thread
/// owns a contiguous index block, so callers writing to slot i of a
/// preallocated vector get output in input order regardless of scheduling.
/// The first exception thrown by any worker (lowest block) is rethrown.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  workers = std::max(1u, workers);
  if (workers == 1 || n < 2 * static_cast<std::size_t>(workers)) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t blocks = workers;
  std::vector<std::exception_ptr> errors(blocks);
  std::vector<std::thread> threads;
  threads.reserve(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t lo = n * b / blocks;
    const std::size_t hi = n * (b + 1) / blocks;
    threads.emplace_back([&, lo, hi, b] {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[b] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace pdpc
