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

#ifndef VOXELSTYLE_SH_HPP_
#define VOXELSTYLE_SH_HPP_

#include <array>

#include "voxelstyle/common.hpp"

namespace voxelstyle {

inline constexpr int kShCoeffCount = 16;

// Real spherical harmonics, bands l = 0..3, graphics convention (no
// Condon-Shortley phase), in (l, m) order with m ascending inside a band:
//   [Y00, Y1-1, Y10, Y11, Y2-2, Y2-1, Y20, Y21, Y22, Y3-3, ..., Y33].
// The input is normalized internally; a zero direction is rejected.
template <typename T>
std::array<T, kShCoeffCount> sh_encode(const Vec3<T>& direction) {
  const double len = std::sqrt(static_cast<double>(
      direction.x() * direction.x() + direction.y() * direction.y() +
      direction.z() * direction.z()));
  if (!(len > 1e-12) || !std::isfinite(len)) {
    throw std::invalid_argument("sh_encode: direction must be nonzero");
  }
  const double x = direction.x() / len;
  const double y = direction.y() / len;
  const double z = direction.z() / len;
  const double xx = x * x, yy = y * y, zz = z * z;
  const double xy = x * y, yz = y * z, xz = x * z;

  std::array<T, kShCoeffCount> c;
  c[0] = T(0.28209479177387814);               // 1/2 sqrt(1/pi)
  c[1] = T(0.4886025119029199 * y);            // sqrt(3/(4pi)) y
  c[2] = T(0.4886025119029199 * z);
  c[3] = T(0.4886025119029199 * x);
  c[4] = T(1.0925484305920792 * xy);           // 1/2 sqrt(15/pi) xy
  c[5] = T(1.0925484305920792 * yz);
  c[6] = T(0.31539156525252005 * (3.0 * zz - 1.0));  // 1/4 sqrt(5/pi)
  c[7] = T(1.0925484305920792 * xz);
  c[8] = T(0.5462742152960396 * (xx - yy));    // 1/4 sqrt(15/pi)
  c[9] = T(0.5900435899266435 * y * (3.0 * xx - yy));
  c[10] = T(2.890611442640554 * xy * z);
  c[11] = T(0.4570457994644658 * y * (5.0 * zz - 1.0));
  c[12] = T(0.3731763325901154 * z * (5.0 * zz - 3.0));
  c[13] = T(0.4570457994644658 * x * (5.0 * zz - 1.0));
  c[14] = T(1.445305721320277 * z * (xx - yy));
  c[15] = T(0.5900435899266435 * x * (xx - 3.0 * yy));
  return c;
}

}  // namespace voxelstyle

#endif  // VOXELSTYLE_SH_HPP_
