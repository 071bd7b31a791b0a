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

#ifndef VOXELSTYLE_VOLUME_RENDER_HPP_
#define VOXELSTYLE_VOLUME_RENDER_HPP_

#include <functional>
#include <vector>

#include "voxelstyle/camera.hpp"
#include "voxelstyle/image.hpp"
#include "voxelstyle/radiance_model.hpp"

namespace voxelstyle {

// Stratified t values: one uniform draw per equal sub-interval, midpoints in
// deterministic mode. Output is strictly increasing inside [t_near, t_far].
inline std::vector<double> sample_points(const Ray& ray, int n_samples,
                                         Rng& rng, bool deterministic) {
  require(n_samples >= 1, "sample_points: need at least one sample");
  require(ray.t_near < ray.t_far, "sample_points: empty ray interval");
  std::vector<double> ts(n_samples);
  const double w = (ray.t_far - ray.t_near) / n_samples;
  for (int i = 0; i < n_samples; ++i) {
    const double u = deterministic ? 0.5 : rng.uniform();
    ts[i] = ray.t_near + (i + u) * w;
  }
  for (int i = 1; i < n_samples; ++i) {  // guard against rounding ties
    if (ts[i] <= ts[i - 1]) {
      ts[i] = std::nextafter(ts[i - 1],
                             std::numeric_limits<double>::infinity());
    }
  }
  return ts;
}

// Huber loss per component, summed: 1/2 rel^2 in the quadratic zone,
// delta * (rel - delta/2) beyond it.
template <typename T>
T huber_loss(T pred, T target, T delta) {
  require(delta > T(0), "huber_loss: delta must be positive");
  const T rel = std::abs(pred - target);
  if (rel <= delta) return T(0.5) * rel * rel;
  return delta * (rel - T(0.5) * delta);
}

template <typename T>
T huber_grad(T pred, T target, T delta) {
  require(delta > T(0), "huber_grad: delta must be positive");
  const T diff = pred - target;
  const T rel = std::abs(diff);
  const T slope = rel <= delta ? rel : delta;
  return diff >= T(0) ? slope : -slope;
}

template <typename T>
T huber_loss(const Vec3<T>& pred, const Vec3<T>& target, T delta) {
  return huber_loss(pred.x(), target.x(), delta) +
         huber_loss(pred.y(), target.y(), delta) +
         huber_loss(pred.z(), target.z(), delta);
}

template <typename T>
Vec3<T> huber_grad(const Vec3<T>& pred, const Vec3<T>& target, T delta) {
  return Vec3<T>(huber_grad(pred.x(), target.x(), delta),
                 huber_grad(pred.y(), target.y(), delta),
                 huber_grad(pred.z(), target.z(), delta));
}

template <typename T>
struct CompositeResult {
  Vec3<T> color;
  T expected_depth;
  T opacity;
};

inline constexpr double kDepthEps = 1e-6;

template <typename T>
void check_composite_args(size_t n_sigmas, size_t n_rgbs, const T* ts,
                          size_t n_ts, T t_far) {
  require(n_sigmas == n_rgbs && n_sigmas == n_ts,
          "composite: sequence lengths differ");
  for (size_t i = 1; i < n_ts; ++i) {
    require(ts[i] > ts[i - 1], "composite: ts must be strictly increasing");
  }
  if (n_ts > 0) {
    require(t_far >= ts[n_ts - 1], "composite: t_far precedes last sample");
  }
}

// Emission-absorption quadrature. alpha_i = 1 - exp(-sigma_i * delta_i),
// delta_i the gap to the next sample (the last gap runs to t_far);
// transmittance T_i is the product of (1 - alpha_j) over j < i. Returns
// accumulated color over background, expected termination depth, and
// opacity.
template <typename T>
CompositeResult<T> composite(const std::vector<T>& sigmas,
                             const std::vector<Vec3<T>>& rgbs,
                             const std::vector<T>& ts, T t_far,
                             const Vec3<T>& background) {
  check_composite_args(sigmas.size(), rgbs.size(), ts.data(), ts.size(),
                       t_far);
  const int n = static_cast<int>(sigmas.size());
  Vec3<T> color(T(0), T(0), T(0));
  T trans = T(1);
  T depth_sum = T(0);
  T opacity = T(0);
  for (int i = 0; i < n; ++i) {
    const T delta = (i + 1 < n ? ts[i + 1] : t_far) - ts[i];
    const T alpha = T(1) - std::exp(-sigmas[i] * delta);
    const T w = trans * alpha;
    color += w * rgbs[i];
    depth_sum += w * ts[i];
    opacity += w;
    trans *= T(1) - alpha;
  }
  color += trans * background;
  CompositeResult<T> out;
  out.color = color;
  out.expected_depth = depth_sum / std::max(opacity, T(kDepthEps));
  out.opacity = opacity;
  return out;
}

template <typename T>
struct CompositeUpstream {
  Vec3<T> d_color{T(0), T(0), T(0)};
  T d_depth = T(0);
  T d_opacity = T(0);
};

template <typename T>
struct CompositeGrads {
  std::vector<T> d_sigmas;
  std::vector<Vec3<T>> d_rgbs;
};

// Reverse pass of composite. Per-sample weight gradients feed the density
// chain through suffix sums, which avoids dividing by (1 - alpha) and stays
// exact when a sample saturates (alpha = 1).
template <typename T>
CompositeGrads<T> composite_backward(const std::vector<T>& sigmas,
                                     const std::vector<Vec3<T>>& rgbs,
                                     const std::vector<T>& ts, T t_far,
                                     const Vec3<T>& background,
                                     const CompositeUpstream<T>& up) {
  check_composite_args(sigmas.size(), rgbs.size(), ts.data(), ts.size(),
                       t_far);
  const int n = static_cast<int>(sigmas.size());
  std::vector<T> delta(n), w(n), trans_next(n);
  T trans = T(1);
  T depth_sum = T(0);
  T opacity = T(0);
  for (int i = 0; i < n; ++i) {
    delta[i] = (i + 1 < n ? ts[i + 1] : t_far) - ts[i];
    const T alpha = T(1) - std::exp(-sigmas[i] * delta[i]);
    w[i] = trans * alpha;
    depth_sum += w[i] * ts[i];
    opacity += w[i];
    trans *= T(1) - alpha;
    trans_next[i] = trans;
  }
  const T m = std::max(opacity, T(kDepthEps));
  const T d_depth_dsum = up.d_depth / m;
  const T d_depth_dop =
      opacity > T(kDepthEps) ? -up.d_depth * depth_sum / (m * m) : T(0);

  CompositeGrads<T> g;
  g.d_sigmas.assign(n, T(0));
  g.d_rgbs.assign(n, Vec3<T>(T(0), T(0), T(0)));
  const T g_trans_final = up.d_color.dot(background);
  T suffix = g_trans_final * trans;  // final transmittance
  for (int i = n - 1; i >= 0; --i) {
    const T g_w = up.d_color.dot(rgbs[i]) + d_depth_dsum * ts[i] +
                  d_depth_dop + up.d_opacity;
    g.d_rgbs[i] = up.d_color * w[i];
    g.d_sigmas[i] = delta[i] * (g_w * trans_next[i] - suffix);
    suffix += g_w * w[i];
  }
  return g;
}

// Applied to the geometric feature vector before the color head; density
// always comes from the untransformed features. The identity transform and
// the stylizing transform run through the same rendering code so their
// density, depth, and opacity outputs match bit for bit.
template <typename T>
using FeatureTransform = std::function<void(const T* geom, T* out)>;

template <typename T>
FeatureTransform<T> identity_transform(int geom_dim) {
  return [geom_dim](const T* geom, T* out) {
    for (int i = 0; i < geom_dim; ++i) out[i] = geom[i];
  };
}

struct RenderConfig {
  int n_samples = 128;
  bool deterministic = true;
  uint64_t seed = 0;
  Vec3<double> background{1.0, 1.0, 1.0};
  Aabb bounds = Aabb::unit_cube();
  int threads = 0;  // 0: VOXELSTYLE_THREADS or hardware

  void validate() const {
    require(n_samples >= 1, "render: n_samples must be >= 1");
    require(bounds.valid(), "render: bounds must be a non-empty box");
  }
};

template <typename T>
struct RenderOutput {
  Image<T> rgb;      // H x W x 3
  Image<T> depth;    // H x W, expected termination distance
  Image<T> opacity;  // H x W

  bool finite() const {
    return all_finite(rgb.data) && all_finite(depth.data) &&
           all_finite(opacity.data);
  }
};

// Renders one view: per pixel, march the clipped ray, query the branch at
// every sample, transform features, shade, and composite. Rays that miss
// the scene box get background color, zero depth, zero opacity.
template <typename T>
RenderOutput<T> render_image(const RadianceModel<T>& model, BranchId branch,
                             const Camera& camera, const RenderConfig& config,
                             const FeatureTransform<T>& transform) {
  camera.validate();
  config.validate();
  const int W = camera.width, H = camera.height;
  RenderOutput<T> out;
  out.rgb = Image<T>(W, H, 3);
  out.depth = Image<T>(W, H, 1);
  out.opacity = Image<T>(W, H, 1);

  const detail::ModelWorkspace<T> ws(model);
  const int bi = branch_index(branch);
  const int feat_dim = model.branches[bi].grid_spec.feature_dim();
  const int geom_dim = model.spec.geom_dim;
  const Vec3<T> bg(static_cast<T>(config.background.x()),
                   static_cast<T>(config.background.y()),
                   static_cast<T>(config.background.z()));

  const int threads = resolve_thread_count(config.threads);
  parallel_for_chunks(threads, static_cast<size_t>(W) * H,
                      [&](int, size_t begin, size_t end) {
    std::vector<T> feat(feat_dim), geom(geom_dim), styled(geom_dim);
    Rng rng(0);
    for (size_t idx = begin; idx < end; ++idx) {
      const int px = static_cast<int>(idx % W);
      const int py = static_cast<int>(idx / W);
      T* rgb_px = &out.rgb.at(py, px, 0);
      auto ray = generate_clipped_ray(camera, px, py, config.bounds);
      if (!ray) {
        rgb_px[0] = bg.x();
        rgb_px[1] = bg.y();
        rgb_px[2] = bg.z();
        out.depth.at(py, px, 0) = T(0);
        out.opacity.at(py, px, 0) = T(0);
        continue;
      }
      if (!config.deterministic) {
        rng = Rng(config.seed ^ (0x9E3779B97F4A7C15ull * (idx + 1)));
      }
      const std::vector<double> ts =
          sample_points(*ray, config.n_samples, rng, config.deterministic);
      auto dir_enc = sh_encode(Vec3<T>(static_cast<T>(ray->direction.x()),
                                       static_cast<T>(ray->direction.y()),
                                       static_cast<T>(ray->direction.z())));
      Vec3<T> color(T(0), T(0), T(0));
      T trans = T(1);
      T depth_sum = T(0);
      T opacity = T(0);
      const int n = config.n_samples;
      for (int i = 0; i < n; ++i) {
        const T t_i = static_cast<T>(ts[i]);
        const T t_next =
            static_cast<T>(i + 1 < n ? ts[i + 1] : ray->t_far);
        const T delta = t_next - t_i;
        T pos[3] = {
            static_cast<T>(ray->origin.x() + ts[i] * ray->direction.x()),
            static_cast<T>(ray->origin.y() + ts[i] * ray->direction.y()),
            static_cast<T>(ray->origin.z() + ts[i] * ray->direction.z())};
        detail::position_forward_ws(model, ws, bi, pos, feat.data(),
                                    geom.data(),
                                    static_cast<MlpCache<T>*>(nullptr));
        const T sigma = density_from_geom(geom[0]);
        const T alpha = T(1) - std::exp(-sigma * delta);
        const T w = trans * alpha;
        if (w != T(0)) {  // a zero weight adds exactly nothing
          transform(geom.data(), styled.data());
          T rgb[3];
          detail::color_forward_ws(model, ws, styled.data(), dir_enc.data(),
                                   rgb, static_cast<MlpCache<T>*>(nullptr));
          color += w * Vec3<T>(rgb[0], rgb[1], rgb[2]);
          depth_sum += w * t_i;
        }
        opacity += w;
        trans *= T(1) - alpha;
      }
      color += trans * bg;
      rgb_px[0] = color.x();
      rgb_px[1] = color.y();
      rgb_px[2] = color.z();
      out.depth.at(py, px, 0) = depth_sum / std::max(opacity, T(kDepthEps));
      out.opacity.at(py, px, 0) = opacity;
    }
  });
  return out;
}

template <typename T>
RenderOutput<T> render_image(const RadianceModel<T>& model, BranchId branch,
                             const Camera& camera,
                             const RenderConfig& config) {
  return render_image(model, branch, camera, config,
                      identity_transform<T>(model.spec.geom_dim));
}

}  // namespace voxelstyle

#endif  // VOXELSTYLE_VOLUME_RENDER_HPP_
