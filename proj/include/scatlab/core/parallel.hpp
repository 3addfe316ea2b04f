#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace scatlab {

/// Worker count used when a caller passes 0.
inline unsigned default_workers() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1u : n;
}

/// Runs body(i) for i in [0, n). Work is pulled in chunks; each index is handled
/// exactly once, so results written to slot i are independent of worker count.
/// The first exception thrown (by lowest index) is rethrown after all workers join.
template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body, std::size_t chunk = 64) {
  if (workers == 0) workers = default_workers();
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, (n + chunk - 1) / std::max<std::size_t>(chunk, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  std::size_t err_index = n;
  auto run = [&] {
    for (;;) {
      const std::size_t start = next.fetch_add(chunk);
      if (start >= n) return;
      const std::size_t stop = std::min(n, start + chunk);
      for (std::size_t i = start; i < stop; ++i) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lk(err_mu);
          if (i < err_index) {
            err_index = i;
            err = std::current_exception();
          }
          return;
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace scatlab
