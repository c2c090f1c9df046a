// Copyright 2026 The AWE Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "awe/parallel.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace awe {

namespace {
std::atomic<int> g_num_threads{1};
}  // namespace

void set_num_threads(int n) { g_num_threads = std::max(1, n); }

int num_threads() { return g_num_threads; }

void parallel_chunks(size_t n, size_t num_chunks,
                     const std::function<void(size_t, size_t, size_t)>& body) {
  if (n == 0) return;
  num_chunks = std::clamp<size_t>(num_chunks, 1, n);
  auto bounds = [&](size_t c) { return c * n / num_chunks; };

  const size_t workers =
      std::min<size_t>(static_cast<size_t>(num_threads()), num_chunks);
  if (workers <= 1) {
    for (size_t c = 0; c < num_chunks; ++c) body(bounds(c), bounds(c + 1), c);
    return;
  }

  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    for (;;) {
      const size_t c = next.fetch_add(1);
      if (c >= num_chunks) return;
      try {
        body(bounds(c), bounds(c + 1), c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace awe
