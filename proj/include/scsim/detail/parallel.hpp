// Copyright 2026 scsim contributors
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

#ifndef SCSIM_DETAIL_PARALLEL_HPP
#define SCSIM_DETAIL_PARALLEL_HPP

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <numeric>
#include <thread>
#include <vector>

namespace scsim::detail {

/// Smallest row count whose packed bit offset is byte aligned: blocks that
/// start at multiples of this never share payload bytes across threads.
inline uint32_t aligned_row_unit(uint32_t width) {
  return 8u / static_cast<uint32_t>(std::gcd<uint64_t>(width, 8u));
}

/// Runs fn(row_begin, row_end) over disjoint row blocks. Block boundaries are
/// byte aligned in the packed frame layout. Results must not depend on the
/// split, which holds for all scsim kernels because their randomness is
/// counter-based per pixel.
inline void parallel_row_blocks(
    uint32_t height, uint32_t width, int threads,
    const std::function<void(uint32_t, uint32_t)>& fn) {
  const uint32_t unit = aligned_row_unit(width);
  const uint32_t units_total = (height + unit - 1) / unit;
  unsigned n_threads =
      threads > 0 ? static_cast<unsigned>(threads)
                  : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, units_total);

  if (n_threads <= 1) {
    fn(0, height);
    return;
  }

  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(n_threads);
  const uint32_t units_per_thread = (units_total + n_threads - 1) / n_threads;
  for (unsigned t = 0; t < n_threads; ++t) {
    const uint32_t r0 = std::min(height, t * units_per_thread * unit);
    const uint32_t r1 = std::min(height, (t + 1) * units_per_thread * unit);
    if (r0 >= r1) break;
    pool.emplace_back([&, t, r0, r1] {
      try {
        fn(r0, r1);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace scsim::detail

#endif  // SCSIM_DETAIL_PARALLEL_HPP
