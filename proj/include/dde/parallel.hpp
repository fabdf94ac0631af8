#pragma once

#include "dde/types.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dde {

/// Worker count: DDE_THREADS if set, else hardware concurrency. A scoped
/// override (ThreadLimit) takes precedence on the calling thread.
Index thread_count();
/// Process-wide worker count; 0 restores the environment default.
void set_default_threads(Index threads);

class ThreadLimit {
 public:
  explicit ThreadLimit(Index limit);
  ~ThreadLimit();
  ThreadLimit(const ThreadLimit&) = delete;
  ThreadLimit& operator=(const ThreadLimit&) = delete;

 private:
  Index previous_;
};

/// Runs body(chunk, begin, end) over fixed-size chunks of [0, n). Chunk
/// boundaries do not depend on the worker count, so per-chunk partial
/// results reduced in chunk order are identical for any thread count.
template <class Body>
void for_each_chunk(Index n, Index chunk_size, Body&& body) {
  if (n <= 0) return;
  const Index chunks = (n + chunk_size - 1) / chunk_size;
  const Index workers = std::min(thread_count(), chunks);
  auto run_chunk = [&](Index c) {
    const Index begin = c * chunk_size;
    body(c, begin, std::min(n, begin + chunk_size));
  };
  if (workers <= 1) {
    for (Index c = 0; c < chunks; ++c) run_chunk(c);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (Index w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      ThreadLimit serial(1);
      for (Index c = next++; c < chunks; c = next++) {
        try {
          run_chunk(c);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline constexpr Index kRowChunk = 256;

}  // namespace dde
