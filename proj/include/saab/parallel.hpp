// Copyright 2026 The saab Authors
// SPDX-License-Identifier: Apache-2.0

// Index-parallel loop for independent replications. Work items are claimed
// from a shared counter; callers store results by index so the outcome does
// not depend on the number of workers or on scheduling.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace saab {

inline int default_workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// Runs body(i) for i in [0, count) on up to `workers` threads (0 means one
// per hardware thread). Once `cancel` becomes true no new index is started.
// An exception from body stops the loop and the one with the smallest index
// is rethrown after all threads have joined. Returns a flag per index telling
// whether body(i) ran to completion.
inline std::vector<char> parallel_for(std::int64_t count, int workers,
                                      const std::function<void(std::int64_t)>& body,
                                      const std::atomic<bool>* cancel = nullptr) {
  std::vector<char> done(static_cast<std::size_t>(std::max<std::int64_t>(count, 0)), 0);
  if (count <= 0) return done;
  if (workers <= 0) workers = default_workers();
  workers = static_cast<int>(std::min<std::int64_t>(workers, count));

  std::atomic<std::int64_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex err_mu;
  std::int64_t err_index = count;
  std::exception_ptr err;

  auto run = [&] {
    for (;;) {
      if (failed.load(std::memory_order_relaxed)) return;
      if (cancel != nullptr && cancel->load(std::memory_order_relaxed)) return;
      const std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) return;
      try {
        body(i);
        done[static_cast<std::size_t>(i)] = 1;
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
        failed.store(true, std::memory_order_relaxed);
      }
    }
  };

  if (workers == 1) {
    run();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(run);
  }
  if (err) std::rethrow_exception(err);
  return done;
}

}  // namespace saab
