// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "csrnet/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace csrnet {
namespace {
std::atomic<int> g_threads{1};
}

void set_num_threads(int n) { g_threads.store(std::max(1, n)); }
int num_threads() { return g_threads.load(); }

std::size_t parallel_chunks(std::size_t count) {
  return std::min<std::size_t>(count, static_cast<std::size_t>(num_threads()));
}

void parallel_for(std::size_t count,
                  const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  if (count == 0) return;
  const std::size_t chunks = parallel_chunks(count);
  if (chunks <= 1) {
    fn(0, count, 0);
    return;
  }
  const std::size_t base = count / chunks;
  const std::size_t extra = count % chunks;
  std::vector<std::exception_ptr> errors(chunks);
  std::vector<std::thread> workers;
  workers.reserve(chunks - 1);
  std::size_t begin = 0;
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t len = base + (c < extra ? 1 : 0);
    ranges.emplace_back(begin, begin + len);
    begin += len;
  }
  auto run = [&](std::size_t c) {
    try {
      fn(ranges[c].first, ranges[c].second, c);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  for (std::size_t c = 1; c < chunks; ++c) workers.emplace_back(run, c);
  run(0);
  for (auto& t : workers) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace csrnet
