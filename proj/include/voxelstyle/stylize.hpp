// Copyright 2026 The voxelstyle Authors
// SPDX-License-Identifier: Apache-2.0
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

#ifndef VOXELSTYLE_STYLIZE_HPP_
#define VOXELSTYLE_STYLIZE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "voxelstyle/common.hpp"
#include "voxelstyle/radiance_model.hpp"
#include "voxelstyle/volume_render.hpp"

namespace voxelstyle {

inline constexpr double kMomentSigmaFloor = 1e-6;
inline constexpr double kDefaultDensityMaskThreshold = 0.01;

// Regular lattice of query positions, the reference population for feature
// statistics.
struct VoxelGridSpec {
  int n_voxels = 128;
  Aabb bounds = Aabb::unit_cube();

  void validate() const {
    require(n_voxels >= 2, "voxel grid: n_voxels must be >= 2");
    require(bounds.valid(), "voxel grid: bounds must be a non-empty box");
  }

  Vec3<double> voxel_center(int ix, int iy, int iz) const {
    const Vec3<double> e = bounds.extent();
    const double n = n_voxels;
    return Vec3<double>(bounds.lo.x() + (ix + 0.5) / n * e.x(),
                        bounds.lo.y() + (iy + 0.5) / n * e.y(),
                        bounds.lo.z() + (iz + 0.5) / n * e.z());
  }
};

// Position-encoder outputs at voxel centers. Rows run over (ix, iy, iz)
// with iz fastest. Densities hold the unadjusted sigma per voxel.
template <typename T>
struct VoxelFeatureGrid {
  int n_voxels = 0;
  int geom_dim = 0;
  std::vector<T> features;
  std::vector<T> densities;

  size_t rows() const { return densities.size(); }
  const T* row(size_t r) const {
    return features.data() + r * static_cast<size_t>(geom_dim);
  }
  T* row(size_t r) {
    return features.data() + r * static_cast<size_t>(geom_dim);
  }

  void validate() const {
    require(geom_dim >= 1, "feature grid: geom_dim must be >= 1");
    require(features.size() == rows() * static_cast<size_t>(geom_dim),
            "feature grid: feature row count mismatch");
    require(all_finite(features) && all_finite(densities),
            "feature grid: values must be finite");
  }
};

template <typename T>
VoxelFeatureGrid<T> extract_voxel_features(const RadianceModel<T>& model,
                                           BranchId branch,
                                           const VoxelGridSpec& spec,
                                           int threads = 0) {
  spec.validate();
  VoxelFeatureGrid<T> grid;
  grid.n_voxels = spec.n_voxels;
  grid.geom_dim = model.spec.geom_dim;
  const size_t n_rows = static_cast<size_t>(spec.n_voxels) * spec.n_voxels *
                        spec.n_voxels;
  grid.features.resize(n_rows * static_cast<size_t>(grid.geom_dim));
  grid.densities.resize(n_rows);

  const int bi = branch_index(branch);
  const int feat_dim = model.branches[bi].grid_spec.feature_dim();
  const int n = spec.n_voxels;
  parallel_for_chunks(resolve_thread_count(threads), n_rows,
                      [&](int, size_t begin, size_t end) {
    const detail::ModelWorkspace<T> ws(model);
    std::vector<T> feat(feat_dim);
    for (size_t r = begin; r < end; ++r) {
      const int iz = static_cast<int>(r % n);
      const int iy = static_cast<int>((r / n) % n);
      const int ix = static_cast<int>(r / (static_cast<size_t>(n) * n));
      const Vec3<double> c = spec.voxel_center(ix, iy, iz);
      const T pos[3] = {static_cast<T>(c.x()), static_cast<T>(c.y()),
                        static_cast<T>(c.z())};
      T* geom = grid.row(r);
      detail::position_forward_ws(model, ws, bi, pos, feat.data(), geom,
                                  static_cast<MlpCache<T>*>(nullptr));
      grid.densities[r] = density_from_geom(geom[0]);
    }
  });
  return grid;
}

// Per-channel mean and population std of a feature population. Sigma is
// floored so downstream divisions stay well posed.
struct FeatureMoments {
  std::vector<double> mu;
  std::vector<double> sigma;

  void validate() const {
    require(mu.size() == sigma.size(), "moments: mu/sigma size mismatch");
    require(all_finite(mu) && all_finite(sigma),
            "moments: values must be finite");
    for (double s : sigma) require(s > 0, "moments: sigma must be positive");
  }
};

template <typename T>
FeatureMoments compute_moments(
    const VoxelFeatureGrid<T>& grid,
    std::optional<double> density_mask_threshold = std::nullopt) {
  grid.validate();
  require(grid.rows() > 0, "moments: empty grid");
  const int gd = grid.geom_dim;
  const size_t n_rows = grid.rows();
  auto included = [&](size_t r) {
    return !density_mask_threshold ||
           static_cast<double>(grid.densities[r]) > *density_mask_threshold;
  };

  FeatureMoments m;
  m.mu.assign(gd, 0.0);
  m.sigma.assign(gd, 0.0);
  size_t count = 0;
  for (size_t r = 0; r < n_rows; ++r) {
    if (!included(r)) continue;
    ++count;
    const T* f = grid.row(r);
    for (int c = 0; c < gd; ++c) m.mu[c] += static_cast<double>(f[c]);
  }
  require(count > 0, "moments: no voxels pass the density mask");
  for (int c = 0; c < gd; ++c) m.mu[c] /= static_cast<double>(count);
  for (size_t r = 0; r < n_rows; ++r) {
    if (!included(r)) continue;
    const T* f = grid.row(r);
    for (int c = 0; c < gd; ++c) {
      const double d = static_cast<double>(f[c]) - m.mu[c];
      m.sigma[c] += d * d;
    }
  }
  for (int c = 0; c < gd; ++c) {
    m.sigma[c] = std::max(std::sqrt(m.sigma[c] / static_cast<double>(count)),
                          kMomentSigmaFloor);
  }
  return m;
}

// Streams the lattice one x-slab at a time instead of materializing all
// N_V^3 rows, re-running the encoder for the second pass. Accumulation
// order matches compute_moments(extract_voxel_features(...)) exactly.
template <typename T>
FeatureMoments compute_model_moments(
    const RadianceModel<T>& model, BranchId branch, const VoxelGridSpec& spec,
    std::optional<double> density_mask_threshold = std::nullopt,
    int threads = 0) {
  spec.validate();
  const int n = spec.n_voxels;
  const int gd = model.spec.geom_dim;
  const int bi = branch_index(branch);
  const int feat_dim = model.branches[bi].grid_spec.feature_dim();
  const size_t slab_rows = static_cast<size_t>(n) * n;
  std::vector<T> slab(slab_rows * static_cast<size_t>(gd));
  std::vector<T> slab_density(slab_rows);
  const int workers = resolve_thread_count(threads);

  auto fill_slab = [&](int ix) {
    parallel_for_chunks(workers, slab_rows, [&](int, size_t begin,
                                                size_t end) {
      const detail::ModelWorkspace<T> ws(model);
      std::vector<T> feat(feat_dim);
      for (size_t r = begin; r < end; ++r) {
        const int iz = static_cast<int>(r % n);
        const int iy = static_cast<int>(r / n);
        const Vec3<double> c = spec.voxel_center(ix, iy, iz);
        const T pos[3] = {static_cast<T>(c.x()), static_cast<T>(c.y()),
                          static_cast<T>(c.z())};
        T* geom = slab.data() + r * static_cast<size_t>(gd);
        detail::position_forward_ws(model, ws, bi, pos, feat.data(), geom,
                                    static_cast<MlpCache<T>*>(nullptr));
        slab_density[r] = density_from_geom(geom[0]);
      }
    });
  };
  auto included = [&](size_t r) {
    return !density_mask_threshold ||
           static_cast<double>(slab_density[r]) > *density_mask_threshold;
  };

  FeatureMoments m;
  m.mu.assign(gd, 0.0);
  m.sigma.assign(gd, 0.0);
  size_t count = 0;
  for (int ix = 0; ix < n; ++ix) {
    fill_slab(ix);
    for (size_t r = 0; r < slab_rows; ++r) {
      if (!included(r)) continue;
      ++count;
      const T* f = slab.data() + r * static_cast<size_t>(gd);
      for (int c = 0; c < gd; ++c) m.mu[c] += static_cast<double>(f[c]);
    }
  }
  require(count > 0, "moments: no voxels pass the density mask");
  for (int c = 0; c < gd; ++c) m.mu[c] /= static_cast<double>(count);
  for (int ix = 0; ix < n; ++ix) {
    fill_slab(ix);
    for (size_t r = 0; r < slab_rows; ++r) {
      if (!included(r)) continue;
      const T* f = slab.data() + r * static_cast<size_t>(gd);
      for (int c = 0; c < gd; ++c) {
        const double d = static_cast<double>(f[c]) - m.mu[c];
        m.sigma[c] += d * d;
      }
    }
  }
  for (int c = 0; c < gd; ++c) {
    m.sigma[c] = std::max(std::sqrt(m.sigma[c] / static_cast<double>(count)),
                          kMomentSigmaFloor);
  }
  return m;
}

namespace detail {

// The moment transfer as scale * f + shift per channel. This form makes
// matched moments an exact identity: scale = 1 and shift = 0 exactly.
struct MomentAffine {
  std::vector<double> scale;
  std::vector<double> shift;
};

inline MomentAffine moment_affine(const FeatureMoments& content,
                                  const FeatureMoments& style) {
  content.validate();
  style.validate();
  require(content.mu.size() == style.mu.size(),
          "adain: moment dimension mismatch");
  const size_t n = content.mu.size();
  MomentAffine a;
  a.scale.resize(n);
  a.shift.resize(n);
  for (size_t c = 0; c < n; ++c) {
    a.scale[c] = style.sigma[c] / content.sigma[c];
    a.shift[c] = style.mu[c] - a.scale[c] * content.mu[c];
  }
  return a;
}

}  // namespace detail

template <typename T>
std::vector<T> adain(const std::vector<T>& f, const FeatureMoments& content,
                     const FeatureMoments& style) {
  const detail::MomentAffine a = detail::moment_affine(content, style);
  require(f.size() == a.scale.size(), "adain: feature dimension mismatch");
  std::vector<T> out(f.size());
  for (size_t c = 0; c < f.size(); ++c) {
    out[c] = static_cast<T>(a.scale[c] * static_cast<double>(f[c]) +
                            a.shift[c]);
  }
  return out;
}

template <typename T>
std::vector<T> adain_blend(const std::vector<T>& f,
                           const FeatureMoments& content,
                           const FeatureMoments& style, double alpha) {
  require(alpha >= 0.0 && alpha <= 1.0, "adain: alpha must be in [0, 1]");
  const detail::MomentAffine a = detail::moment_affine(content, style);
  require(f.size() == a.scale.size(), "adain: feature dimension mismatch");
  std::vector<T> out(f.size());
  for (size_t c = 0; c < f.size(); ++c) {
    const double fc = static_cast<double>(f[c]);
    const double styled = a.scale[c] * fc + a.shift[c];
    out[c] = static_cast<T>((1.0 - alpha) * fc + alpha * styled);
  }
  return out;
}

enum class StyleDirection { kContentToStyle, kStyleToContent };

struct StyleBlend {
  double alpha = 1.0;
  StyleDirection direction = StyleDirection::kContentToStyle;

  void validate() const {
    require(alpha >= 0.0 && alpha <= 1.0, "stylize: alpha must be in [0, 1]");
  }
};

// Bakes the blended moment transfer into a per-sample feature transform for
// the renderer. Arithmetic matches adain_blend exactly.
template <typename T>
FeatureTransform<T> make_feature_transform(const FeatureMoments& content,
                                           const FeatureMoments& style,
                                           double alpha) {
  require(alpha >= 0.0 && alpha <= 1.0, "stylize: alpha must be in [0, 1]");
  detail::MomentAffine a = detail::moment_affine(content, style);
  const int gd = static_cast<int>(a.scale.size());
  return [a = std::move(a), alpha, gd](const T* geom, T* out) {
    for (int c = 0; c < gd; ++c) {
      const double fc = static_cast<double>(geom[c]);
      const double styled = a.scale[c] * fc + a.shift[c];
      out[c] = static_cast<T>((1.0 - alpha) * fc + alpha * styled);
    }
  };
}

// Renders the branch selected by blend.direction with its color features
// pushed toward the other branch's statistics. Density, depth, and opacity
// always come from the untransformed features.
template <typename T>
RenderOutput<T> render_stylized(const RadianceModel<T>& model,
                                const Camera& camera, const StyleBlend& blend,
                                const FeatureMoments& content_moments,
                                const FeatureMoments& style_moments,
                                const RenderConfig& config) {
  blend.validate();
  const bool c2s = blend.direction == StyleDirection::kContentToStyle;
  const BranchId branch = c2s ? BranchId::kContent : BranchId::kStyle;
  const FeatureMoments& self = c2s ? content_moments : style_moments;
  const FeatureMoments& other = c2s ? style_moments : content_moments;
  return render_image(model, branch, camera, config,
                      make_feature_transform<T>(self, other, blend.alpha));
}

}  // namespace voxelstyle

#endif  // VOXELSTYLE_STYLIZE_HPP_
