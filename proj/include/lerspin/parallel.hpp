#pragma once

// Minimal index-range parallel_for. Work items must write to disjoint slots;
// results are then independent of the thread count, which is taken from the
// LERSPIN_THREADS environment variable when set (0 or 1 disables threading).

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace lerspin {

inline unsigned thread_count() {
  if (const char* env = std::getenv("LERSPIN_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 0) return static_cast<unsigned>(n);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const unsigned nt = thread_count();
  if (nt <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(nt, n));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace lerspin
