// Copyright (c) 2026 The coalsim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

#include "coalsim/rng.hpp"
#include "coalsim/stats.hpp"

namespace coalsim {

inline int default_thread_count() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Evaluates f(rng, replicate_index) for replicate indices 0..n-1, each on
/// its own stream (stream_id = stream_base + index).  Results land in a
/// vector indexed by replicate, so downstream reductions are independent of
/// the worker count and schedule.
template <class F>
std::vector<double> run_replicates(std::uint64_t seed,
                                   std::uint64_t stream_base, std::size_t n,
                                   int threads, F&& f) {
  std::vector<double> out(n);
  if (threads <= 1 || n < 256) {
    for (std::size_t i = 0; i < n; ++i) {
      RngStream rng(seed, stream_base + i);
      out[i] = f(rng, i);
    }
    return out;
  }
  std::atomic<std::size_t> next{0};
  const std::size_t chunk = std::max<std::size_t>(64, n / (8 * threads));
  auto worker = [&]() {
    for (;;) {
      const std::size_t begin = next.fetch_add(chunk);
      if (begin >= n) return;
      const std::size_t end = std::min(n, begin + chunk);
      for (std::size_t i = begin; i < end; ++i) {
        RngStream rng(seed, stream_base + i);
        out[i] = f(rng, i);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return out;
}

template <class F>
MCEstimate monte_carlo(std::uint64_t seed, std::uint64_t stream_base,
                       std::size_t n, int threads, F&& f) {
  const std::vector<double> values =
      run_replicates(seed, stream_base, n, threads, std::forward<F>(f));
  return summarize(values, seed, stream_base);
}

}  // namespace coalsim
