#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace viscidlab {

namespace detail {
inline std::atomic<std::size_t>& worker_setting() {
  static std::atomic<std::size_t> workers{0};
  return workers;
}

// Set on worker threads; nested loops then run inline.
inline thread_local bool in_parallel_region = false;
}  // namespace detail

/// Number of worker threads used by parallel loops. Falls back to the
/// VISCIDLAB_WORKERS environment variable, then to 1.
inline std::size_t default_workers() {
  std::size_t w = detail::worker_setting().load();
  if (w > 0) return w;
  if (const char* env = std::getenv("VISCIDLAB_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (...) {
    }
  }
  return 1;
}

inline void set_default_workers(std::size_t workers) { detail::worker_setting().store(workers); }

/// Runs fn(i) for i in [0, count). Work is split into contiguous chunks, so
/// any per-index output is independent of the worker count. The first
/// exception thrown by a worker is rethrown on the calling thread. Calls made
/// from inside a worker run serially.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn, std::size_t workers = 0) {
  if (workers == 0) workers = default_workers();
  workers = std::min(workers, count);
  if (workers <= 1 || detail::in_parallel_region) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&, begin, end] {
      detail::in_parallel_region = true;
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace viscidlab
