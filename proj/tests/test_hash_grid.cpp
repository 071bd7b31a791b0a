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

#include "voxelstyle/hash_grid.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "gtest/gtest.h"

namespace voxelstyle {
namespace {

HashGridSpec SmallDenseSpec() {
  HashGridSpec spec;
  spec.levels = 2;
  spec.table_size = 1u << 14;
  spec.features_per_level = 2;
  spec.base_resolution = 4;
  spec.growth_factor = 2.0;
  return spec;
}

TEST(HashGridTest, LevelResolutionMatchesFormula) {
  HashGridSpec spec;
  spec.base_resolution = 16;
  spec.growth_factor = 2.0;
  spec.levels = 3;
  EXPECT_EQ(level_resolution(spec, 0), 16);
  EXPECT_EQ(level_resolution(spec, 2), 64);

  spec.growth_factor = 1.5;
  spec.levels = 4;
  EXPECT_EQ(level_resolution(spec, 3), 54);  // floor(16 * 3.375)

  EXPECT_THROW(level_resolution(spec, -1), std::out_of_range);
  EXPECT_THROW(level_resolution(spec, 4), std::out_of_range);
}

TEST(HashGridTest, DenseIndexIsRowMajor) {
  HashGridSpec spec;
  spec.levels = 1;
  spec.base_resolution = 2;
  spec.growth_factor = 1.5;
  ASSERT_EQ(level_resolution(spec, 0), 2);
  EXPECT_EQ(grid_index(spec, 0, {1, 0, 1}), 10u);  // 1*9 + 0*3 + 1
  EXPECT_EQ(grid_index(spec, 0, {0, 0, 0}), 0u);
  EXPECT_THROW(grid_index(spec, 0, {-1, 0, 0}), std::out_of_range);
  EXPECT_THROW(grid_index(spec, 0, {0, 3, 0}), std::out_of_range);
}

TEST(HashGridTest, DenseIndexIsInjective) {
  HashGridSpec spec;
  spec.levels = 1;
  spec.base_resolution = 7;
  spec.growth_factor = 1.5;
  const int n = level_resolution(spec, 0);
  ASSERT_LE(static_cast<uint64_t>(n + 1) * (n + 1) * (n + 1),
            spec.table_size);
  std::vector<bool> seen(spec.table_size, false);
  for (int x = 0; x <= n; ++x) {
    for (int y = 0; y <= n; ++y) {
      for (int z = 0; z <= n; ++z) {
        uint32_t row = grid_index(spec, 0, {x, y, z});
        ASSERT_LT(row, spec.table_size);
        EXPECT_FALSE(seen[row]) << "collision at " << x << "," << y << "," << z;
        seen[row] = true;
      }
    }
  }
}

// Independent scalar recomputation of the spatial hash, written without the
// helper under test.
uint32_t ReferenceHash(uint32_t x, uint32_t y, uint32_t z, uint32_t table) {
  uint64_t hx = (static_cast<uint64_t>(x) * 1ull) & 0xffffffffull;
  uint64_t hy = (static_cast<uint64_t>(y) * 2654435761ull) & 0xffffffffull;
  uint64_t hz = (static_cast<uint64_t>(z) * 805459861ull) & 0xffffffffull;
  return static_cast<uint32_t>((hx ^ hy ^ hz) % table);
}

TEST(HashGridTest, SpatialHashMatchesReference) {
  HashGridSpec spec;
  spec.levels = 3;
  spec.base_resolution = 16;
  spec.growth_factor = 1.5;
  spec.table_size = 1u << 14;
  // Level 2 has resolution 36; 37^3 > 2^14, so its rows are hashed.
  ASSERT_EQ(level_resolution(spec, 2), 36);
  EXPECT_EQ(grid_index(spec, 2, {1, 2, 3}),
            ReferenceHash(1, 2, 3, spec.table_size));
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    int x = static_cast<int>(rng.below(37));
    int y = static_cast<int>(rng.below(37));
    int z = static_cast<int>(rng.below(37));
    EXPECT_EQ(grid_index(spec, 2, {x, y, z}),
              ReferenceHash(x, y, z, spec.table_size));
  }
}

TEST(HashGridTest, EncodeAtVertexReproducesStoredRow) {
  HashGridSpec spec = SmallDenseSpec();
  auto params = HashGridParams<double>::zeros(spec);
  // Vertex (1,2,3) of level 0 (resolution 4) and the matching vertex of
  // level 1 (resolution 8). base_resolution is a power of two so the vertex
  // coordinates are exact binary fractions.
  const std::array<int, 3> v0 = {1, 2, 3};
  const std::array<int, 3> v1 = {2, 4, 6};
  const uint32_t r0 = grid_index(spec, 0, v0);
  const uint32_t r1 = grid_index(spec, 1, v1);
  params.tables[0][r0 * 2 + 0] = 0.25;
  params.tables[0][r0 * 2 + 1] = -1.5;
  params.tables[1][r1 * 2 + 0] = 3.0;
  params.tables[1][r1 * 2 + 1] = 0.125;
  Vec3<double> pos(1.0 / 4, 2.0 / 4, 3.0 / 4);
  auto f = encode(params, spec, pos);
  ASSERT_EQ(f.size(), 4u);
  EXPECT_EQ(f[0], 0.25);
  EXPECT_EQ(f[1], -1.5);
  EXPECT_EQ(f[2], 3.0);
  EXPECT_EQ(f[3], 0.125);
}

TEST(HashGridTest, EncodeUpperBoundUsesBoundaryVertex) {
  HashGridSpec spec = SmallDenseSpec();
  auto params = HashGridParams<double>::zeros(spec);
  const uint32_t r0 = grid_index(spec, 0, {4, 4, 4});
  params.tables[0][r0 * 2 + 0] = 2.0;
  auto f = encode(params, spec, Vec3<double>(1.0, 1.0, 1.0));
  EXPECT_EQ(f[0], 2.0);
}

TEST(HashGridTest, ZeroTablesEncodeToZero) {
  HashGridSpec spec = SmallDenseSpec();
  auto params = HashGridParams<double>::zeros(spec);
  auto f = encode(params, spec, Vec3<double>(0.3, 0.6, 0.9));
  for (double v : f) EXPECT_EQ(v, 0.0);
}

TEST(HashGridTest, CellCenterAveragesCorners) {
  HashGridSpec spec = SmallDenseSpec();
  spec.levels = 1;
  auto params = HashGridParams<double>::zeros(spec);
  // Corners of the cell with min vertex (1,1,1) at level 0, values 0..7 in
  // channel 0 in the same (dx,dy,dz) order used for interpolation.
  int k = 0;
  for (int dx = 0; dx < 2; ++dx) {
    for (int dy = 0; dy < 2; ++dy) {
      for (int dz = 0; dz < 2; ++dz) {
        uint32_t row = grid_index(spec, 0, {1 + dx, 1 + dy, 1 + dz});
        params.tables[0][row * 2 + 0] = k++;
      }
    }
  }
  auto f = encode(params, spec, Vec3<double>(1.5 / 4, 1.5 / 4, 1.5 / 4));
  EXPECT_DOUBLE_EQ(f[0], 3.5);
}

TEST(HashGridTest, PositionsOutsideBoundsAreClamped) {
  HashGridSpec spec = SmallDenseSpec();
  Rng rng(11);
  auto params = HashGridParams<double>::init(spec, rng, 1.0);
  auto inside = encode(params, spec, Vec3<double>(0.0, 1.0, 0.5));
  auto outside = encode(params, spec, Vec3<double>(-0.7, 2.3, 0.5));
  ASSERT_EQ(inside.size(), outside.size());
  for (size_t i = 0; i < inside.size(); ++i) EXPECT_EQ(inside[i], outside[i]);
}

TEST(HashGridTest, NonFinitePositionThrows) {
  HashGridSpec spec = SmallDenseSpec();
  auto params = HashGridParams<double>::zeros(spec);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_THROW(encode(params, spec, Vec3<double>(nan, 0.5, 0.5)),
               std::invalid_argument);
  EXPECT_THROW(encode(params, spec, Vec3<double>(0.5, inf, 0.5)),
               std::invalid_argument);
}

// Partition of unity, checked through linearity: with every table entry set
// to one, each output channel is exactly the sum of the 8 trilinear weights.
// Hash collisions do not disturb this because colliding rows also hold 1.
TEST(HashGridTest, TrilinearWeightsSumToOne) {
  HashGridSpec spec;
  spec.levels = 6;
  spec.base_resolution = 3;
  spec.growth_factor = 1.7;
  spec.table_size = 1u << 10;  // upper levels overflow into hashing
  auto params = HashGridParams<double>::zeros(spec);
  for (auto& t : params.tables) std::fill(t.begin(), t.end(), 1.0);
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    Vec3<double> pos(rng.uniform(), rng.uniform(), rng.uniform());
    auto f = encode(params, spec, pos);
    for (double v : f) EXPECT_NEAR(v, 1.0, 1e-12);
  }
  for (double v : encode(params, spec, Vec3<double>(0.0, 0.5, 1.0))) {
    EXPECT_NEAR(v, 1.0, 1e-12);
  }
}

TEST(HashGridTest, EncodeIsContinuousAcrossCellBoundaries) {
  HashGridSpec spec;  // default configuration, hashed upper levels included
  Rng rng(19);
  auto params = HashGridParams<float>::init(spec, rng);
  // Step one float ulp across vertex planes of the coarsest level and of a
  // hashed level. A seam from inconsistent cell/corner bookkeeping would
  // jump at the feature scale (1e-4), far above the bound; the Lipschitz
  // slope over one ulp stays orders of magnitude below it.
  std::vector<float> planes;
  for (int i = 1; i < 16; ++i) {
    planes.push_back(static_cast<float>(i) / 16.0f);
  }
  const int n2 = level_resolution(spec, 2);
  for (int i = 1; i < n2; i += 7) {
    planes.push_back(static_cast<float>(i) / static_cast<float>(n2));
  }
  for (float b : planes) {
    const float lo = std::nextafterf(b, 0.0f);
    const float hi = std::nextafterf(b, 1.0f);
    auto fa = encode(params, spec, Vec3<float>(lo, 0.37f, 0.61f));
    auto fb = encode(params, spec, Vec3<float>(hi, 0.37f, 0.61f));
    for (size_t j = 0; j < fa.size(); ++j) {
      EXPECT_NEAR(fa[j], fb[j], 1e-6f);
    }
  }
}

TEST(HashGridTest, EncodeIsLinearInParams) {
  HashGridSpec spec = SmallDenseSpec();
  Rng rng(23);
  auto p1 = HashGridParams<double>::init(spec, rng, 1.0);
  auto p2 = HashGridParams<double>::init(spec, rng, 1.0);
  const double a = 2.75;
  auto combined = HashGridParams<double>::zeros(spec);
  for (int l = 0; l < spec.levels; ++l) {
    for (size_t i = 0; i < combined.tables[l].size(); ++i) {
      combined.tables[l][i] = a * p1.tables[l][i] + p2.tables[l][i];
    }
  }
  Vec3<double> pos(0.21, 0.84, 0.55);
  auto f1 = encode(p1, spec, pos);
  auto f2 = encode(p2, spec, pos);
  auto fc = encode(combined, spec, pos);
  for (size_t i = 0; i < fc.size(); ++i) {
    EXPECT_NEAR(fc[i], a * f1[i] + f2[i], 1e-12);
  }
}

TEST(HashGridTest, BackwardAtVertexHitsSingleRowPerLevel) {
  HashGridSpec spec = SmallDenseSpec();
  std::vector<double> upstream = {1.0, 2.0, 3.0, 4.0};
  auto entries = encode_backward(spec, Vec3<double>(0.25, 0.5, 0.75),
                                 upstream);
  std::map<std::pair<int, uint32_t>, std::vector<double>> rows;
  for (const auto& e : entries) {
    auto& vals = rows[{e.level, e.row}];
    vals.resize(spec.features_per_level, 0.0);
    vals[e.channel] += e.value;
  }
  ASSERT_EQ(rows.size(), 2u);  // one row per level
  const uint32_t r0 = grid_index(spec, 0, {1, 2, 3});
  const uint32_t r1 = grid_index(spec, 1, {2, 4, 6});
  const auto key0 = std::make_pair(0, r0);
  const auto key1 = std::make_pair(1, r1);
  ASSERT_TRUE(rows.count(key0));
  ASSERT_TRUE(rows.count(key1));
  EXPECT_DOUBLE_EQ(rows[key0][0], 1.0);
  EXPECT_DOUBLE_EQ(rows[key0][1], 2.0);
  EXPECT_DOUBLE_EQ(rows[key1][0], 3.0);
  EXPECT_DOUBLE_EQ(rows[key1][1], 4.0);
}

TEST(HashGridTest, BackwardWithZeroUpstreamIsEmpty) {
  HashGridSpec spec = SmallDenseSpec();
  std::vector<double> upstream(spec.feature_dim(), 0.0);
  auto entries = encode_backward(spec, Vec3<double>(0.3, 0.4, 0.5), upstream);
  EXPECT_TRUE(entries.empty());
}

TEST(HashGridTest, BackwardRejectsWrongUpstreamLength) {
  HashGridSpec spec = SmallDenseSpec();
  std::vector<double> upstream(spec.feature_dim() + 1, 1.0);
  EXPECT_THROW(encode_backward(spec, Vec3<double>(0.3, 0.4, 0.5), upstream),
               std::invalid_argument);
}

double DotWithEncode(const HashGridParams<double>& params,
                     const HashGridSpec& spec, const Vec3<double>& pos,
                     const std::vector<double>& upstream) {
  auto f = encode(params, spec, pos);
  double s = 0.0;
  for (size_t i = 0; i < f.size(); ++i) s += f[i] * upstream[i];
  return s;
}

// Central finite differences over the table entries, the independent oracle
// for the analytic backward pass. Also exercised on a tiny hashed table so
// colliding corners must accumulate by summation to match.
void CheckBackwardAgainstFiniteDifferences(const HashGridSpec& spec,
                                           uint64_t seed) {
  Rng rng(seed);
  auto params = HashGridParams<double>::init(spec, rng, 1.0);
  Vec3<double> pos(rng.uniform(), rng.uniform(), rng.uniform());
  std::vector<double> upstream(spec.feature_dim());
  for (auto& u : upstream) u = rng.uniform(-2.0, 2.0);

  auto entries = encode_backward(spec, pos, upstream);
  std::map<std::tuple<int, uint32_t, int>, double> analytic;
  for (const auto& e : entries) {
    analytic[{e.level, e.row, e.channel}] += e.value;
  }
  ASSERT_FALSE(analytic.empty());

  const double h = 1e-5;
  for (const auto& [key, grad] : analytic) {
    auto [level, row, channel] = key;
    auto perturbed = params;
    double& slot =
        perturbed.tables[level][row * spec.features_per_level + channel];
    const double base = slot;
    slot = base + h;
    const double fp = DotWithEncode(perturbed, spec, pos, upstream);
    slot = base - h;
    const double fm = DotWithEncode(perturbed, spec, pos, upstream);
    const double fd = (fp - fm) / (2 * h);
    const double scale = std::max({std::abs(fd), std::abs(grad), 1e-8});
    EXPECT_LT(std::abs(fd - grad) / scale, 1e-5)
        << "level " << level << " row " << row << " channel " << channel;
  }

  // A row no corner touched must have zero gradient.
  for (uint32_t row = 0; row < spec.table_size; ++row) {
    if (analytic.count({0, row, 0})) continue;
    auto perturbed = params;
    double& slot = perturbed.tables[0][row * spec.features_per_level];
    slot += h;
    const double fp = DotWithEncode(perturbed, spec, pos, upstream);
    slot -= 2 * h;
    const double fm = DotWithEncode(perturbed, spec, pos, upstream);
    EXPECT_NEAR((fp - fm) / (2 * h), 0.0, 1e-9);
    break;
  }
}

TEST(HashGridTest, BackwardMatchesFiniteDifferencesDense) {
  CheckBackwardAgainstFiniteDifferences(SmallDenseSpec(), 101);
}

TEST(HashGridTest, BackwardMatchesFiniteDifferencesHashedWithCollisions) {
  HashGridSpec spec;
  spec.levels = 2;
  spec.table_size = 8;  // tiny table, collisions certain at resolution 16
  spec.features_per_level = 2;
  spec.base_resolution = 16;
  spec.growth_factor = 1.5;
  for (uint64_t seed : {5u, 6u, 7u}) {
    CheckBackwardAgainstFiniteDifferences(spec, seed);
  }
}

TEST(HashGridTest, SpecValidateRejectsBadConfigs) {
  HashGridSpec spec;
  spec.validate();
  HashGridSpec bad = spec;
  bad.table_size = 100;  // not a power of two
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.levels = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.growth_factor = 1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.base_resolution = 1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(HashGridTest, InitBoundsAndDeterminism) {
  HashGridSpec spec = SmallDenseSpec();
  Rng a(42), b(42);
  auto pa = HashGridParams<float>::init(spec, a);
  auto pb = HashGridParams<float>::init(spec, b);
  for (int l = 0; l < spec.levels; ++l) {
    for (size_t i = 0; i < pa.tables[l].size(); ++i) {
      EXPECT_EQ(pa.tables[l][i], pb.tables[l][i]);
      EXPECT_LE(std::abs(pa.tables[l][i]), 1e-4f);
    }
  }
}

}  // namespace
}  // namespace voxelstyle
