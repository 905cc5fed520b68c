#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rankcause {

// Worker cap shared by all parallel kernels. Zero means "use the hardware
// concurrency" (or RANKCAUSE_THREADS when set).
void set_thread_count(std::size_t n);
std::size_t thread_count();

// Splits [0, n) into contiguous chunks, one per worker, and calls
// body(begin, end, worker_index). Chunking is static so any reduction that
// is order-independent (integer sums) gives the same result for every
// worker count.
template <typename Body>
void parallel_for(std::size_t n, Body&& body, std::size_t min_chunk = 16) {
  std::size_t workers = std::min<std::size_t>(thread_count(), (n + min_chunk - 1) / std::max<std::size_t>(min_chunk, 1));
  workers = std::max<std::size_t>(workers, 1);
  if (workers == 1) {
    body(std::size_t{0}, n, std::size_t{0});
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end, w] {
      try {
        body(begin, end, w);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// Number of workers parallel_for will use for n items.
inline std::size_t planned_workers(std::size_t n, std::size_t min_chunk = 16) {
  std::size_t workers = std::min<std::size_t>(thread_count(), (n + min_chunk - 1) / std::max<std::size_t>(min_chunk, 1));
  return std::max<std::size_t>(workers, 1);
}

}  // namespace rankcause
