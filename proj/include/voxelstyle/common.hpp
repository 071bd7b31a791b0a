// Copyright 2026 The voxelstyle Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VOXELSTYLE_COMMON_HPP_
#define VOXELSTYLE_COMMON_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

// Hot per-sample kernels are kept out of line so the scalar and batched
// entry points run the exact same machine code; several contracts in this
// library promise bit-identical results between the two.
#define VOXELSTYLE_NOINLINE __attribute__((noinline))

namespace voxelstyle {

template <typename T>
using Vec3 = Eigen::Matrix<T, 3, 1>;
template <typename T>
using Mat3 = Eigen::Matrix<T, 3, 3>;
template <typename T>
using Mat4 = Eigen::Matrix<T, 4, 4>;

// Axis-aligned box in scene units. Configuration-level geometry is kept in
// double regardless of the scalar type used for the network.
struct Aabb {
  Vec3<double> lo{0.0, 0.0, 0.0};
  Vec3<double> hi{1.0, 1.0, 1.0};

  static Aabb unit_cube() { return Aabb{}; }

  Vec3<double> extent() const { return hi - lo; }

  bool valid() const {
    return lo.x() < hi.x() && lo.y() < hi.y() && lo.z() < hi.z();
  }
};

// Deterministic RNG: the mt19937_64 engine has a portable output sequence,
// and the value mappings below avoid std distributions (whose outputs are
// implementation defined).
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be > 0.
  uint32_t below(uint32_t n) {
    return static_cast<uint32_t>((static_cast<unsigned __int128>(eng_()) * n) >> 64);
  }

 private:
  std::mt19937_64 eng_;
};

// Worker count: explicit argument wins, then VOXELSTYLE_THREADS, then the
// hardware concurrency.
inline int resolve_thread_count(int requested = 0) {
  if (requested >= 1) return requested;
  if (const char* env = std::getenv("VOXELSTYLE_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<int>(v);
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn(worker, begin, end) over a contiguous partition of [0, n).
// Worker w always receives the same range for a given (workers, n), which
// keeps any per-worker accumulation reproducible.
template <typename Fn>
void parallel_for_chunks(int workers, size_t n, Fn&& fn) {
  workers = std::max(1, workers);
  if (workers == 1 || n < 2) {
    if (n > 0) fn(0, size_t{0}, n);
    return;
  }
  size_t w = static_cast<size_t>(workers);
  if (w > n) w = n;
  std::vector<std::thread> threads;
  threads.reserve(w - 1);
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&](int worker) {
    size_t begin = n * worker / w;
    size_t end = n * (worker + 1) / w;
    if (begin >= end) return;
    try {
      fn(worker, begin, end);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  for (int i = 1; i < static_cast<int>(w); ++i) threads.emplace_back(run, i);
  run(0);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

template <typename T>
bool all_finite(const std::vector<T>& v) {
  for (const T& x : v) {
    if (!std::isfinite(static_cast<double>(x))) return false;
  }
  return true;
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace voxelstyle

#endif  // VOXELSTYLE_COMMON_HPP_
