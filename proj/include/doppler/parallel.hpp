#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace doppler {

// Worker count: DOPPLER_THREADS if set, else hardware concurrency.
inline int thread_count() {
  if (const char* env = std::getenv("DOPPLER_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

// Runs fn(i) for i in [0, count). Work is split into fixed-size chunks whose
// layout does not depend on the worker count, so any reduction done per chunk
// and combined in chunk order gives bit-identical results for any number of
// threads. fn must write only to locations owned by item i.
inline void parallel_for(std::int64_t count, const std::function<void(std::int64_t)>& fn,
                         std::int64_t chunk = 0) {
  if (count <= 0) return;
  const int workers = thread_count();
  if (workers <= 1 || count == 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  if (chunk <= 0) chunk = (count + 8 * workers - 1) / (8 * workers);
  if (chunk < 1) chunk = 1;
  const std::int64_t nchunks = (count + chunk - 1) / chunk;
  std::atomic<std::int64_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::int64_t c = next.fetch_add(1);
      if (c >= nchunks) return;
      const std::int64_t lo = c * chunk;
      const std::int64_t hi = lo + chunk < count ? lo + chunk : count;
      for (std::int64_t i = lo; i < hi; ++i) fn(i);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int t = 0; t < workers - 1; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

}  // namespace doppler
