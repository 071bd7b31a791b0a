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

#ifndef VOXELSTYLE_CONSISTENCY_HPP_
#define VOXELSTYLE_CONSISTENCY_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "voxelstyle/camera.hpp"
#include "voxelstyle/image.hpp"
#include "voxelstyle/volume_render.hpp"

namespace voxelstyle {

inline constexpr double kDefaultDepthTolerance = 0.02;
inline constexpr double kDefaultOpacityThreshold = 0.5;

// image_j resampled into view i's frame. mask is 1 where the reprojection
// stayed in bounds, passed the depth-consistency test, and view i's pixel
// was opaque enough to carry a trustworthy depth.
template <typename T>
struct WarpResult {
  Image<T> warped;
  std::vector<uint8_t> mask;

  size_t valid_count() const {
    size_t n = 0;
    for (uint8_t m : mask) n += m;
    return n;
  }
};

namespace detail {

// Border-clamped bilinear sample; x, y within half a pixel of the image
// rectangle read the border texel.
template <typename T>
inline double bilinear(const Image<T>& img, int channel, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const double ax = x - fx;
  const double ay = y - fy;
  const int x0 = std::clamp(static_cast<int>(fx), 0, img.width - 1);
  const int x1 = std::clamp(static_cast<int>(fx) + 1, 0, img.width - 1);
  const int y0 = std::clamp(static_cast<int>(fy), 0, img.height - 1);
  const int y1 = std::clamp(static_cast<int>(fy) + 1, 0, img.height - 1);
  const double v00 = img.at(y0, x0, channel);
  const double v10 = img.at(y0, x1, channel);
  const double v01 = img.at(y1, x0, channel);
  const double v11 = img.at(y1, x1, channel);
  return (1.0 - ay) * ((1.0 - ax) * v00 + ax * v10) +
         ay * ((1.0 - ax) * v01 + ax * v11);
}

// Pixel coordinates of a world point, or nullopt when it lies behind the
// camera.
inline std::optional<std::pair<double, double>> project_point(
    const Camera& cam, const Vec3<double>& point) {
  const Vec3<double> eye = cam.pose.template block<3, 1>(0, 3);
  const Mat3<double> rot = cam.pose.template block<3, 3>(0, 0);
  const Vec3<double> p = rot.transpose() * (point - eye);
  if (p.z() >= 0.0) return std::nullopt;
  const double f = cam.focal();
  const double px = f * p.x() / -p.z() + 0.5 * cam.width - 0.5;
  const double py = -f * p.y() / -p.z() + 0.5 * cam.height - 0.5;
  return std::make_pair(px, py);
}

// Sum of squared rgb differences and pixel count over the warp mask.
template <typename T>
inline std::pair<double, size_t> masked_sse(const Image<T>& image_i,
                                            const WarpResult<T>& warp) {
  require(image_i.width == warp.warped.width &&
              image_i.height == warp.warped.height &&
              image_i.channels == 3 && warp.warped.channels == 3,
          "masked_error: image/warp shape mismatch");
  require(warp.mask.size() ==
              static_cast<size_t>(image_i.width) * image_i.height,
          "masked_error: mask size mismatch");
  double sse = 0.0;
  size_t count = 0;
  for (int y = 0; y < image_i.height; ++y) {
    for (int x = 0; x < image_i.width; ++x) {
      if (!warp.mask[static_cast<size_t>(y) * image_i.width + x]) continue;
      ++count;
      for (int c = 0; c < 3; ++c) {
        const double d = static_cast<double>(image_i.at(y, x, c)) -
                         static_cast<double>(warp.warped.at(y, x, c));
        sse += d * d;
      }
    }
  }
  return {sse, count};
}

}  // namespace detail

// Resamples view j's image into view i's frame: each pixel of i is
// unprojected with i's expected depth, transformed, and bilinearly sampled
// from view j. Depths measure Euclidean distance from the camera center,
// the renderer's ray parameter.
template <typename T>
WarpResult<T> backward_warp(const Image<T>& image_j, const Image<T>& depth_j,
                            const Camera& camera_j, const Image<T>& depth_i,
                            const Image<T>& opacity_i, const Camera& camera_i,
                            double depth_tolerance = kDefaultDepthTolerance,
                            double opacity_threshold =
                                kDefaultOpacityThreshold,
                            int threads = 0) {
  camera_i.validate();
  camera_j.validate();
  const int W = image_j.width, H = image_j.height;
  require(image_j.channels == 3, "warp: image_j must have 3 channels");
  require(depth_j.width == W && depth_j.height == H && depth_j.channels == 1,
          "warp: depth_j resolution mismatch");
  require(depth_i.width == W && depth_i.height == H && depth_i.channels == 1,
          "warp: depth_i resolution mismatch");
  require(opacity_i.width == W && opacity_i.height == H &&
              opacity_i.channels == 1,
          "warp: opacity_i resolution mismatch");
  require(camera_i.width == W && camera_i.height == H &&
              camera_j.width == W && camera_j.height == H,
          "warp: camera resolution mismatch");
  require(depth_tolerance > 0, "warp: depth tolerance must be positive");

  WarpResult<T> out;
  out.warped = Image<T>(W, H, 3);
  out.mask.assign(static_cast<size_t>(W) * H, 0);
  const Vec3<double> eye_j = camera_j.pose.block<3, 1>(0, 3);

  parallel_for_chunks(resolve_thread_count(threads),
                      static_cast<size_t>(W) * H,
                      [&](int, size_t begin, size_t end) {
    for (size_t idx = begin; idx < end; ++idx) {
      const int px = static_cast<int>(idx % W);
      const int py = static_cast<int>(idx / W);
      if (!(static_cast<double>(opacity_i.at(py, px, 0)) >
            opacity_threshold)) {
        continue;
      }
      const Ray ray = generate_ray(camera_i, px, py);
      const double t = static_cast<double>(depth_i.at(py, px, 0));
      const Vec3<double> point = ray.origin + t * ray.direction;
      const auto proj = detail::project_point(camera_j, point);
      if (!proj) continue;
      const auto [sx, sy] = *proj;
      if (!(sx >= -0.5 && sx <= W - 0.5 && sy >= -0.5 && sy <= H - 0.5)) {
        continue;
      }
      const double dist_j = (point - eye_j).norm();
      const double sampled_depth = detail::bilinear(depth_j, 0, sx, sy);
      if (!(std::abs(dist_j - sampled_depth) < depth_tolerance)) continue;
      for (int c = 0; c < 3; ++c) {
        out.warped.at(py, px, c) =
            static_cast<T>(detail::bilinear(image_j, c, sx, sy));
      }
      out.mask[idx] = 1;
    }
  });
  return out;
}

// Root-mean-square rgb difference over the warp mask.
template <typename T>
double masked_error(const Image<T>& image_i, const WarpResult<T>& warp) {
  const auto [sse, count] = detail::masked_sse(image_i, warp);
  require(count > 0, "masked_error: empty mask");
  return std::sqrt(sse / (3.0 * static_cast<double>(count)));
}

template <typename T>
struct PosedRender {
  Camera camera;
  RenderOutput<T> render;
};

struct GapScore {
  int gap = 0;
  int pairs = 0;
  double mean = 0.0;
  double stddev = 0.0;
};

// Mean pairwise consistency over (i, i+gap) index pairs. Each pair's error
// pools both warp directions, so reversing the camera path leaves the
// score unchanged.
template <typename T>
std::vector<GapScore> consistency_score(
    const std::vector<PosedRender<T>>& seq,
    const std::vector<int>& gaps = {5, 15},
    double depth_tolerance = kDefaultDepthTolerance,
    double opacity_threshold = kDefaultOpacityThreshold, int threads = 0) {
  require(!gaps.empty(), "consistency: gap list is empty");
  const int n = static_cast<int>(seq.size());
  for (int gap : gaps) {
    require(gap >= 1, "consistency: gaps must be >= 1");
    require(n > gap, "consistency: sequence too short for requested gap");
  }

  auto pair_error = [&](const PosedRender<T>& a, const PosedRender<T>& b) {
    const auto w_ba = backward_warp(b.render.rgb, b.render.depth, b.camera,
                                    a.render.depth, a.render.opacity,
                                    a.camera, depth_tolerance,
                                    opacity_threshold, threads);
    const auto w_ab = backward_warp(a.render.rgb, a.render.depth, a.camera,
                                    b.render.depth, b.render.opacity,
                                    b.camera, depth_tolerance,
                                    opacity_threshold, threads);
    const auto [sse_a, n_a] = detail::masked_sse(a.render.rgb, w_ba);
    const auto [sse_b, n_b] = detail::masked_sse(b.render.rgb, w_ab);
    require(n_a + n_b > 0, "consistency: no valid overlap in a view pair");
    return std::sqrt((sse_a + sse_b) /
                     (3.0 * static_cast<double>(n_a + n_b)));
  };

  std::vector<GapScore> scores;
  scores.reserve(gaps.size());
  for (int gap : gaps) {
    GapScore s;
    s.gap = gap;
    s.pairs = n - gap;
    double sum = 0.0;
    std::vector<double> errs;
    errs.reserve(s.pairs);
    for (int i = 0; i + gap < n; ++i) {
      const double e = pair_error(seq[i], seq[i + gap]);
      errs.push_back(e);
      sum += e;
    }
    s.mean = sum / s.pairs;
    double ss = 0.0;
    for (double e : errs) ss += (e - s.mean) * (e - s.mean);
    s.stddev = std::sqrt(ss / s.pairs);
    scores.push_back(s);
  }
  return scores;
}

// Plain-text table: gap, pair count, mean, std.
inline std::string format_consistency_report(
    const std::vector<GapScore>& scores) {
  std::ostringstream os;
  os << "multi-view consistency, masked rgb RMSE over depth-warped pairs\n";
  os << "(photometric stand-in for a perceptual metric)\n";
  os << "gap  pairs  mean          std\n";
  for (const auto& s : scores) {
    os << std::left << std::setw(5) << s.gap << std::setw(7) << s.pairs
       << std::setw(14) << std::setprecision(6) << s.mean
       << std::setprecision(6) << s.stddev << "\n";
  }
  return os.str();
}

inline std::string consistency_report_json(
    const std::vector<GapScore>& scores) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "{\"metric\":\"masked_rmse\",\"gaps\":[";
  for (size_t i = 0; i < scores.size(); ++i) {
    if (i) os << ",";
    os << "{\"gap\":" << scores[i].gap << ",\"pairs\":" << scores[i].pairs
       << ",\"mean\":" << scores[i].mean << ",\"std\":" << scores[i].stddev
       << "}";
  }
  os << "]}";
  return os.str();
}

}  // namespace voxelstyle

#endif  // VOXELSTYLE_CONSISTENCY_HPP_
