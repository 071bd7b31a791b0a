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

#ifndef VOXELSTYLE_HASH_GRID_HPP_
#define VOXELSTYLE_HASH_GRID_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include "voxelstyle/common.hpp"

namespace voxelstyle {

// Multiresolution hash-grid position encoding. Each level conceptually
// stores feature vectors at the vertices of a grid of resolution N_l; vertex
// rows live either densely (small levels) or in a fixed-size hash table.
struct HashGridSpec {
  int levels = 8;
  uint32_t table_size = 1u << 14;  // must be a power of two
  int features_per_level = 2;
  int base_resolution = 16;
  double growth_factor = 1.5;
  Aabb bounds = Aabb::unit_cube();

  int feature_dim() const { return levels * features_per_level; }

  void validate() const {
    require(levels >= 1, "hash grid: levels must be >= 1");
    require(table_size >= 8, "hash grid: table_size must be >= 8");
    require((table_size & (table_size - 1)) == 0,
            "hash grid: table_size must be a power of two");
    require(features_per_level >= 1,
            "hash grid: features_per_level must be >= 1");
    require(base_resolution >= 2, "hash grid: base_resolution must be >= 2");
    require(growth_factor > 1.0, "hash grid: growth_factor must be > 1");
    require(bounds.valid(), "hash grid: bounds must be a non-empty box");
  }
};

// Grid resolution at a level: N_l = floor(N_min * b^l).
inline int level_resolution(const HashGridSpec& spec, int level) {
  if (level < 0 || level >= spec.levels) {
    throw std::out_of_range("hash grid: level index out of range");
  }
  double r = spec.base_resolution * std::pow(spec.growth_factor, level);
  return static_cast<int>(std::floor(r));
}

// Row index for an integer vertex of a level. When the level's vertex set
// fits in the table ((N_l+1)^3 <= T) the mapping is the dense row-major
// index and therefore injective; otherwise it is the xor-combined spatial
// hash. The first prime is 1 so runs along x stay cache-coherent.
inline uint32_t grid_index(const HashGridSpec& spec, int level,
                           const std::array<int, 3>& corner) {
  const int n = level_resolution(spec, level);
  for (int a = 0; a < 3; ++a) {
    if (corner[a] < 0 || corner[a] > n) {
      throw std::out_of_range("hash grid: corner coordinate out of range");
    }
  }
  const uint64_t verts = static_cast<uint64_t>(n) + 1;
  if (verts * verts * verts <= spec.table_size) {
    return static_cast<uint32_t>((static_cast<uint64_t>(corner[0]) * verts +
                                  corner[1]) * verts + corner[2]);
  }
  uint32_t h = static_cast<uint32_t>(corner[0]) * 1u;
  h ^= static_cast<uint32_t>(corner[1]) * 2654435761u;
  h ^= static_cast<uint32_t>(corner[2]) * 805459861u;
  return h & (spec.table_size - 1);  // table_size is a power of two
}

// Trainable per-level feature tables.
template <typename T>
struct HashGridParams {
  std::vector<std::vector<T>> tables;  // [level][row * F + channel]

  static HashGridParams zeros(const HashGridSpec& spec) {
    spec.validate();
    HashGridParams p;
    p.tables.assign(spec.levels,
                    std::vector<T>(static_cast<size_t>(spec.table_size) *
                                       spec.features_per_level,
                                   T(0)));
    return p;
  }

  // Uniform init in [-scale, scale], the usual small symmetric start.
  static HashGridParams init(const HashGridSpec& spec, Rng& rng,
                             double scale = 1e-4) {
    HashGridParams p = zeros(spec);
    for (auto& table : p.tables) {
      for (T& v : table) v = static_cast<T>(rng.uniform(-scale, scale));
    }
    return p;
  }

  bool shape_matches(const HashGridSpec& spec) const {
    if (static_cast<int>(tables.size()) != spec.levels) return false;
    for (const auto& t : tables) {
      if (t.size() != static_cast<size_t>(spec.table_size) *
                          spec.features_per_level) {
        return false;
      }
    }
    return true;
  }
};

// Gradient accumulator mirroring the table layout. Collisions sum.
template <typename T>
struct HashGridGrads {
  std::vector<std::vector<T>> tables;

  static HashGridGrads zeros(const HashGridSpec& spec) {
    HashGridGrads g;
    g.tables.assign(spec.levels,
                    std::vector<T>(static_cast<size_t>(spec.table_size) *
                                       spec.features_per_level,
                                   T(0)));
    return g;
  }

  void set_zero() {
    for (auto& t : tables) std::fill(t.begin(), t.end(), T(0));
  }

  void add(const HashGridGrads& other) {
    for (size_t l = 0; l < tables.size(); ++l) {
      const auto& src = other.tables[l];
      auto& dst = tables[l];
      for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }
};

template <typename T>
struct GridGradEntry {
  int level;
  uint32_t row;
  int channel;
  T value;
};

namespace detail {

// Per-level constants resolved once so the per-sample kernels avoid pow().
struct HashGridLayout {
  struct Level {
    int resolution;
    bool dense;
    uint64_t verts;  // resolution + 1
  };
  std::vector<Level> levels;
  uint32_t table_mask;
  Vec3<double> lo;
  Vec3<double> inv_extent;

  explicit HashGridLayout(const HashGridSpec& spec) {
    levels.reserve(spec.levels);
    for (int l = 0; l < spec.levels; ++l) {
      Level lv;
      lv.resolution = level_resolution(spec, l);
      lv.verts = static_cast<uint64_t>(lv.resolution) + 1;
      lv.dense = lv.verts * lv.verts * lv.verts <= spec.table_size;
      levels.push_back(lv);
    }
    table_mask = spec.table_size - 1;
    lo = spec.bounds.lo;
    Vec3<double> ext = spec.bounds.extent();
    inv_extent = Vec3<double>(1.0 / ext.x(), 1.0 / ext.y(), 1.0 / ext.z());
  }

  uint32_t row_of(const Level& lv, int x, int y, int z) const {
    if (lv.dense) {
      return static_cast<uint32_t>((static_cast<uint64_t>(x) * lv.verts + y) *
                                       lv.verts + z);
    }
    uint32_t h = static_cast<uint32_t>(x) * 1u;
    h ^= static_cast<uint32_t>(y) * 2654435761u;
    h ^= static_cast<uint32_t>(z) * 805459861u;
    return h & table_mask;
  }
};

// Cell coordinates and trilinear corner weights for one level. Positions at
// the upper bound fold into the last cell with fraction 1 so vertex rows are
// still reproduced exactly.
template <typename T>
struct CellCoords {
  int c[3];
  T frac[3];
};

template <typename T>
inline CellCoords<T> cell_coords(const HashGridLayout::Level& lv,
                                 const T u[3]) {
  CellCoords<T> cc;
  for (int a = 0; a < 3; ++a) {
    T g = u[a] * static_cast<T>(lv.resolution);
    int c = static_cast<int>(g);
    if (c > lv.resolution - 1) c = lv.resolution - 1;
    if (c < 0) c = 0;
    cc.c[a] = c;
    cc.frac[a] = g - static_cast<T>(c);
  }
  return cc;
}

template <typename T>
VOXELSTYLE_NOINLINE void hash_encode_sample(
    const std::vector<std::vector<T>>& tables, const HashGridLayout& layout,
    int features_per_level, const T* pos, T* out) {
  T u[3];
  for (int a = 0; a < 3; ++a) {
    double v = (static_cast<double>(pos[a]) - layout.lo[a]) *
               layout.inv_extent[a];
    u[a] = static_cast<T>(std::clamp(v, 0.0, 1.0));
  }
  const int F = features_per_level;
  for (size_t l = 0; l < layout.levels.size(); ++l) {
    const auto& lv = layout.levels[l];
    const T* table = tables[l].data();
    CellCoords<T> cc = cell_coords(lv, u);
    T* dst = out + l * F;
    for (int f = 0; f < F; ++f) dst[f] = T(0);
    for (int corner = 0; corner < 8; ++corner) {
      const int dx = corner >> 2, dy = (corner >> 1) & 1, dz = corner & 1;
      const T wx = dx ? cc.frac[0] : T(1) - cc.frac[0];
      const T wy = dy ? cc.frac[1] : T(1) - cc.frac[1];
      const T wz = dz ? cc.frac[2] : T(1) - cc.frac[2];
      const T w = wx * wy * wz;
      const uint32_t row =
          layout.row_of(lv, cc.c[0] + dx, cc.c[1] + dy, cc.c[2] + dz);
      const T* src = table + static_cast<size_t>(row) * F;
      for (int f = 0; f < F; ++f) dst[f] += w * src[f];
    }
  }
}

// Scatters upstream gradient to the touched rows via sink(level, row,
// channel, value). Colliding rows receive multiple contributions; the caller
// accumulates them by summation.
template <typename T, typename Sink>
inline void hash_encode_backward_sample(const HashGridLayout& layout,
                                        int features_per_level, const T* pos,
                                        const T* upstream, Sink&& sink) {
  T u[3];
  for (int a = 0; a < 3; ++a) {
    double v = (static_cast<double>(pos[a]) - layout.lo[a]) *
               layout.inv_extent[a];
    u[a] = static_cast<T>(std::clamp(v, 0.0, 1.0));
  }
  const int F = features_per_level;
  for (size_t l = 0; l < layout.levels.size(); ++l) {
    const auto& lv = layout.levels[l];
    CellCoords<T> cc = cell_coords(lv, u);
    const T* up = upstream + l * F;
    for (int corner = 0; corner < 8; ++corner) {
      const int dx = corner >> 2, dy = (corner >> 1) & 1, dz = corner & 1;
      const T wx = dx ? cc.frac[0] : T(1) - cc.frac[0];
      const T wy = dy ? cc.frac[1] : T(1) - cc.frac[1];
      const T wz = dz ? cc.frac[2] : T(1) - cc.frac[2];
      const T w = wx * wy * wz;
      const uint32_t row =
          layout.row_of(lv, cc.c[0] + dx, cc.c[1] + dy, cc.c[2] + dz);
      for (int f = 0; f < F; ++f) {
        sink(static_cast<int>(l), row, f, w * up[f]);
      }
    }
  }
}

}  // namespace detail

template <typename T>
void check_position_finite(const Vec3<T>& position) {
  if (!std::isfinite(static_cast<double>(position.x())) ||
      !std::isfinite(static_cast<double>(position.y())) ||
      !std::isfinite(static_cast<double>(position.z()))) {
    throw std::invalid_argument("position must be finite");
  }
}

// Encodes one position into L*F features: per level, trilinear interpolation
// of the 8 corner rows of the enclosing cell, concatenated over levels.
// Positions outside the bounds are clamped onto the box.
template <typename T>
std::vector<T> encode(const HashGridParams<T>& params,
                      const HashGridSpec& spec, const Vec3<T>& position) {
  check_position_finite(position);
  detail::HashGridLayout layout(spec);
  std::vector<T> out(spec.feature_dim());
  T pos[3] = {position.x(), position.y(), position.z()};
  detail::hash_encode_sample(params.tables, layout, spec.features_per_level,
                             pos, out.data());
  return out;
}

// Gradient of encode with respect to the table entries: each touched corner
// row receives the upstream gradient scaled by its trilinear weight.
// Contributions to the same row are returned individually (sum to combine).
template <typename T>
std::vector<GridGradEntry<T>> encode_backward(const HashGridSpec& spec,
                                              const Vec3<T>& position,
                                              const std::vector<T>& upstream) {
  check_position_finite(position);
  require(static_cast<int>(upstream.size()) == spec.feature_dim(),
          "encode_backward: upstream gradient has wrong length");
  detail::HashGridLayout layout(spec);
  std::vector<GridGradEntry<T>> entries;
  entries.reserve(static_cast<size_t>(spec.levels) * 8 *
                  spec.features_per_level);
  T pos[3] = {position.x(), position.y(), position.z()};
  detail::hash_encode_backward_sample(
      layout, spec.features_per_level, pos, upstream.data(),
      [&](int level, uint32_t row, int channel, T value) {
        if (value != T(0)) {
          entries.push_back(GridGradEntry<T>{level, row, channel, value});
        }
      });
  return entries;
}

}  // namespace voxelstyle

#endif  // VOXELSTYLE_HASH_GRID_HPP_
