#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace efflln {

/// Runs body(i) for i in [0, count) on `workers` threads. Each index is
/// handled exactly once; results must be written to per-index slots so the
/// outcome does not depend on the worker count. The first exception thrown
/// is rethrown after all threads join.
inline void parallel_for(std::uint64_t count, unsigned workers,
                         const std::function<void(std::uint64_t)>& body) {
  workers = std::max(1u, workers);
  if (workers == 1 || count < 2) {
    for (std::uint64_t i = 0; i < count; ++i) body(i);
    return;
  }
  const auto n = static_cast<unsigned>(std::min<std::uint64_t>(workers, count));
  std::exception_ptr first_error;
  std::mutex mu;
  std::vector<std::thread> pool;
  pool.reserve(n);
  for (unsigned w = 0; w < n; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::uint64_t i = w; i < count; i += n) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace efflln
