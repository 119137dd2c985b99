#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace imu_guard {

/// Requested parallelism capped by the IMU_GUARD_THREADS environment variable.
unsigned effective_parallelism(unsigned requested);

/// Runs fn(i) for i in [0, count) on up to `parallelism` threads. Every index
/// runs even if another throws; the exception of the lowest failing index is
/// rethrown.
template <class Fn>
void parallel_for(std::size_t count, unsigned parallelism, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, parallelism), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace imu_guard
