#pragma once

#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace hdgbc {

/// Worker-thread cap from HDG_THREADS (default 1).
inline int worker_threads() {
  if (const char* env = std::getenv("HDG_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

/// Run fn(i) for i in [0, count). Work items must be independent; results
/// must be written to per-index slots so the outcome is identical for any
/// thread count.
inline void parallel_for(int count, const std::function<void(int)>& fn) {
  const int threads = std::min(worker_threads(), count > 0 ? count : 1);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  std::mutex mutex;
  std::exception_ptr first_error;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([=, &fn, &mutex, &first_error] {
      try {
        for (int i = t; i < count; i += threads) fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace hdgbc
