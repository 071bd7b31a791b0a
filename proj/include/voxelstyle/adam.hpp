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

#ifndef VOXELSTYLE_ADAM_HPP_
#define VOXELSTYLE_ADAM_HPP_

#include <cstdint>
#include <vector>

#include "voxelstyle/common.hpp"

namespace voxelstyle {

// First/second moment accumulators and a step counter for one parameter
// tensor.
template <typename T>
struct AdamState {
  std::vector<T> m;
  std::vector<T> v;
  int64_t step = 0;

  static AdamState zeros(size_t n) {
    AdamState s;
    s.m.assign(n, T(0));
    s.v.assign(n, T(0));
    return s;
  }
};

// Standard bias-corrected Adam update on one flat tensor. Moment math runs
// in double so tiny epsilon values behave the same for float parameters.
template <typename T>
void adam_step(T* params, const T* grads, size_t n, AdamState<T>& state,
               double lr, double beta1, double beta2, double eps) {
  require(state.m.size() == n && state.v.size() == n,
          "adam_step: state shape mismatch");
  require(lr > 0 && eps > 0, "adam_step: lr and eps must be positive");
  require(beta1 > 0 && beta1 < 1 && beta2 > 0 && beta2 < 1,
          "adam_step: betas must lie in (0,1)");
  state.step += 1;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < n; ++i) {
    const double g = static_cast<double>(grads[i]);
    const double m = beta1 * static_cast<double>(state.m[i]) +
                     (1.0 - beta1) * g;
    const double v = beta2 * static_cast<double>(state.v[i]) +
                     (1.0 - beta2) * g * g;
    state.m[i] = static_cast<T>(m);
    state.v[i] = static_cast<T>(v);
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    params[i] = static_cast<T>(static_cast<double>(params[i]) -
                               lr * m_hat / (std::sqrt(v_hat) + eps));
  }
}

}  // namespace voxelstyle

#endif  // VOXELSTYLE_ADAM_HPP_
