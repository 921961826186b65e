#pragma once

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace pkm {

/// Worker cap: hardware concurrency, bounded by the PKM_THREADS env var.
inline int worker_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("PKM_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1 && cap < n) n = cap;
  }
  return n;
}

/// Runs fn(shard) for shard in [0, n_shards) across workers. The shard
/// decomposition is fixed by the caller, so results merged in shard order
/// are identical no matter how many threads ran.
template <typename Fn>
inline void parallel_shards(int n_shards, Fn&& fn, int max_workers = 0) {
  int workers = worker_count();
  if (max_workers > 0 && max_workers < workers) workers = max_workers;
  if (workers <= 1 || n_shards <= 1) {
    for (int s = 0; s < n_shards; ++s) fn(s);
    return;
  }
  std::atomic<int> next{0};
  auto run = [&]() {
    for (;;) {
      const int s = next.fetch_add(1);
      if (s >= n_shards) return;
      fn(s);
    }
  };
  std::vector<std::thread> pool;
  const int spawn = std::min(workers, n_shards);
  pool.reserve(static_cast<size_t>(spawn));
  for (int w = 0; w < spawn; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
}

}  // namespace pkm
