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

#ifndef VOXELSTYLE_RADIANCE_MODEL_HPP_
#define VOXELSTYLE_RADIANCE_MODEL_HPP_

#include <array>
#include <utility>
#include <vector>

#include "voxelstyle/common.hpp"
#include "voxelstyle/hash_grid.hpp"
#include "voxelstyle/mlp.hpp"
#include "voxelstyle/sh.hpp"

namespace voxelstyle {

// Two scene branches feed a shared color head. Branch 0 carries the content
// scene, branch 1 the style scene.
enum class BranchId { kContent = 0, kStyle = 1 };

inline constexpr int kBranchCount = 2;

inline int branch_index(BranchId b) { return static_cast<int>(b); }

inline const char* branch_name(BranchId b) {
  return b == BranchId::kContent ? "content" : "style";
}

struct ModelSpec {
  int geom_dim = 16;        // density-MLP output width; channel 0 is density
  int density_hidden = 64;  // one hidden layer
  int color_hidden = 64;    // two hidden layers
  int color_hidden_layers = 2;

  void validate() const {
    require(geom_dim >= 2, "model: geom_dim must be >= 2");
    require(geom_dim + kShCoeffCount <= 128,
            "model: geom_dim exceeds the color-input limit");
    require(density_hidden >= 1 && color_hidden >= 1,
            "model: hidden widths must be positive");
    require(color_hidden_layers >= 1,
            "model: color MLP needs at least one hidden layer");
  }

  MlpSpec density_mlp_spec(int encoded_dim) const {
    MlpSpec s;
    s.layers.push_back({encoded_dim, density_hidden, Activation::kRelu});
    s.layers.push_back({density_hidden, geom_dim, Activation::kNone});
    return s;
  }

  // Consumes the geometric feature vector concatenated with the direction
  // encoding; sigmoid keeps rgb strictly inside (0,1).
  MlpSpec color_mlp_spec() const {
    MlpSpec s;
    int in = geom_dim + kShCoeffCount;
    for (int l = 0; l < color_hidden_layers; ++l) {
      s.layers.push_back({in, color_hidden, Activation::kRelu});
      in = color_hidden;
    }
    s.layers.push_back({in, 3, Activation::kSigmoid});
    return s;
  }
};

template <typename T>
struct RadianceBranch {
  HashGridSpec grid_spec;
  HashGridParams<T> grid;
  MlpParams<T> density_mlp;
};

// The full two-branch model: per-branch hash tables and density MLPs, one
// shared color MLP, one shared direction encoder.
template <typename T>
struct RadianceModel {
  ModelSpec spec;
  std::array<RadianceBranch<T>, kBranchCount> branches;
  MlpParams<T> color_mlp;

  static RadianceModel init(const HashGridSpec& grid_spec,
                            const ModelSpec& model_spec, Rng& rng) {
    grid_spec.validate();
    model_spec.validate();
    RadianceModel m;
    m.spec = model_spec;
    for (auto& b : m.branches) {
      b.grid_spec = grid_spec;
      b.grid = HashGridParams<T>::init(grid_spec, rng);
      b.density_mlp = MlpParams<T>::init(
          model_spec.density_mlp_spec(grid_spec.feature_dim()), rng);
    }
    m.color_mlp = MlpParams<T>::init(model_spec.color_mlp_spec(), rng);
    return m;
  }

  RadianceBranch<T>& branch(BranchId b) { return branches[branch_index(b)]; }
  const RadianceBranch<T>& branch(BranchId b) const {
    return branches[branch_index(b)];
  }
};

// Density activation: exp with the argument clamped so early training noise
// cannot overflow.
template <typename T>
T density_from_geom(T geom0) {
  const T z = std::clamp(geom0, T(-15), T(15));
  return std::exp(z);
}

namespace detail {

// Precomputed per-model constants for the hot paths: hash layouts and
// transposed MLP weights. Rebuild after any parameter update.
template <typename T>
struct ModelWorkspace {
  std::vector<HashGridLayout> layouts;       // per branch
  std::vector<MlpScratch<T>> density_ws;     // per branch
  MlpScratch<T> color_ws;

  explicit ModelWorkspace(const RadianceModel<T>& m)
      : color_ws(m.color_mlp) {
    for (const auto& b : m.branches) {
      layouts.emplace_back(b.grid_spec);
      density_ws.emplace_back(b.density_mlp);
    }
  }
};

// Hash-encode one position and run the density MLP. feat must hold
// grid_spec.feature_dim() values; geom must hold spec.geom_dim.
template <typename T>
inline void position_forward_ws(const RadianceModel<T>& m,
                                const ModelWorkspace<T>& ws, int branch,
                                const T* pos, T* feat, T* geom,
                                MlpCache<T>* cache) {
  const auto& br = m.branches[branch];
  hash_encode_sample(br.grid.tables, ws.layouts[branch],
                     br.grid_spec.features_per_level, pos, feat);
  mlp_forward_sample(br.density_mlp.spec, ws.density_ws[branch],
                     br.density_mlp, feat, geom, cache);
}

// Shared color head on a (possibly feature-transformed) geom vector.
template <typename T>
inline void color_forward_ws(const RadianceModel<T>& m,
                             const ModelWorkspace<T>& ws, const T* geom,
                             const T* dir_enc, T* rgb, MlpCache<T>* cache) {
  T input[128];
  const int gd = m.spec.geom_dim;
  for (int i = 0; i < gd; ++i) input[i] = geom[i];
  for (int i = 0; i < kShCoeffCount; ++i) input[gd + i] = dir_enc[i];
  mlp_forward_sample(m.color_mlp.spec, ws.color_ws, m.color_mlp, input, rgb,
                     cache);
}

}  // namespace detail

// Density and geometric features at a position. sigma derives from channel
// 0 of the unmodified geom vector; the full geom vector (density channel
// included) is the downstream feature f(x,y,z).
template <typename T>
std::pair<T, std::vector<T>> position_forward(const RadianceModel<T>& m,
                                              BranchId branch,
                                              const Vec3<T>& position) {
  check_position_finite(position);
  detail::ModelWorkspace<T> ws(m);
  const int bi = branch_index(branch);
  std::vector<T> feat(m.branches[bi].grid_spec.feature_dim());
  std::vector<T> geom(m.spec.geom_dim);
  T pos[3] = {position.x(), position.y(), position.z()};
  detail::position_forward_ws(m, ws, bi, pos, feat.data(), geom.data(),
                              static_cast<MlpCache<T>*>(nullptr));
  return {density_from_geom(geom[0]), std::move(geom)};
}

// Shared color head: rgb = sigmoid(colorMLP(concat(geom, dir_enc))).
template <typename T>
Vec3<T> color_forward(const RadianceModel<T>& m, const std::vector<T>& geom,
                      const std::array<T, kShCoeffCount>& dir_enc) {
  require(static_cast<int>(geom.size()) == m.spec.geom_dim,
          "color_forward: geom width mismatch");
  detail::ModelWorkspace<T> ws(m);
  T rgb[3];
  detail::color_forward_ws(m, ws, geom.data(), dir_enc.data(), rgb,
                           static_cast<MlpCache<T>*>(nullptr));
  return Vec3<T>(rgb[0], rgb[1], rgb[2]);
}

// Composition of the position stage, direction encoding, and color head.
template <typename T>
std::pair<T, Vec3<T>> full_forward(const RadianceModel<T>& m, BranchId branch,
                                   const Vec3<T>& position,
                                   const Vec3<T>& direction) {
  auto [sigma, geom] = position_forward(m, branch, position);
  auto dir_enc = sh_encode(direction);
  Vec3<T> rgb = color_forward(m, geom, dir_enc);
  return {sigma, rgb};
}

}  // namespace voxelstyle

#endif  // VOXELSTYLE_RADIANCE_MODEL_HPP_
