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

namespace xferlab {

// Runs fn(i) for i in [0, n) on up to `workers` threads. Work items must
// write only to slot i of a pre-sized result buffer; the caller reduces in
// index order afterwards, which keeps results independent of scheduling.
// The first exception thrown by any item is rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto body = [&] {
    while (true) {
      auto i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  auto count = std::min(workers, n);
  pool.reserve(count);
  for (std::size_t t = 0; t < count; ++t) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Splits [0, n) into at most `workers` contiguous chunks and runs
// fn(begin, end) for each, so per-worker state (an inference engine, scratch
// buffers) is built once per chunk rather than once per item.
template <typename Fn>
void parallel_chunks(std::size_t n, std::size_t workers, Fn&& fn) {
  if (n == 0) return;
  const auto chunks = std::max<std::size_t>(1, std::min(workers, n));
  parallel_for(chunks, chunks, [&](std::size_t k) { fn(k * n / chunks, (k + 1) * n / chunks); });
}

// --workers wins; XFERLAB_WORKERS is the fallback; otherwise one worker.
inline std::size_t resolve_workers(long flag_value) {
  if (flag_value > 0) return static_cast<std::size_t>(flag_value);
  if (const char* env = std::getenv("XFERLAB_WORKERS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return 1;
}

}  // namespace xferlab
