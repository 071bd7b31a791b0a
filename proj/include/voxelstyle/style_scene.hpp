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

#ifndef VOXELSTYLE_STYLE_SCENE_HPP_
#define VOXELSTYLE_STYLE_SCENE_HPP_

#include <array>
#include <cmath>
#include <vector>

#include "voxelstyle/dataset.hpp"

namespace voxelstyle {

// A 2D image lifted into 3D: one colored voxel per pixel, forming a plane
// one voxel thick, axis-aligned with normal +z, centered in the unit cube.
// The longer image edge spans 0.8 of the cube edge. Row 0 sits at +y so a
// camera on the +z axis sees the image upright.
struct VoxelPlaneScene {
  int width = 0;
  int height = 0;
  double voxel_edge = 0.0;
  Vec3<double> center{0.5, 0.5, 0.5};
  std::vector<float> colors;  // height x width x 3

  double plane_width() const { return width * voxel_edge; }
  double plane_height() const { return height * voxel_edge; }

  Vec3<double> voxel_center(int i, int j) const {
    return Vec3<double>(center.x() + (i + 0.5 - 0.5 * width) * voxel_edge,
                        center.y() - (j + 0.5 - 0.5 * height) * voxel_edge,
                        center.z());
  }

  const float* color_at(int i, int j) const {
    return &colors[(static_cast<size_t>(j) * width + i) * 3];
  }

  Aabb aabb() const {
    Aabb box;
    box.lo = center - Vec3<double>(0.5 * plane_width(), 0.5 * plane_height(),
                                   0.5 * voxel_edge);
    box.hi = center + Vec3<double>(0.5 * plane_width(), 0.5 * plane_height(),
                                   0.5 * voxel_edge);
    return box;
  }

  void validate() const {
    require(width >= 1 && height >= 1, "voxel plane: empty grid");
    require(voxel_edge > 0, "voxel plane: voxel edge must be positive");
    require(colors.size() ==
                static_cast<size_t>(width) * height * 3,
            "voxel plane: color count mismatch");
    for (float c : colors) {
      require(c >= 0.0f && c <= 1.0f, "voxel plane: colors must be in [0,1]");
    }
  }
};

// One voxel per pixel; images larger than max_long_edge on their long side
// are box-filtered down first. Aspect ratio is preserved.
inline VoxelPlaneScene image_to_voxel_scene(const Image<float>& image,
                                            int max_long_edge = 128) {
  require(image.width >= 1 && image.height >= 1,
          "image_to_voxel_scene: empty image");
  require(image.channels == 3, "image_to_voxel_scene: need a 3-channel rgb");
  require(max_long_edge >= 1, "image_to_voxel_scene: bad max_long_edge");
  Image<float> src = image;
  if (std::max(image.width, image.height) > max_long_edge) {
    src = downsample_to(image, max_long_edge);
  }
  VoxelPlaneScene scene;
  scene.width = src.width;
  scene.height = src.height;
  scene.voxel_edge = 0.8 / std::max(src.width, src.height);
  scene.colors.resize(static_cast<size_t>(src.width) * src.height * 3);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const float v = src.at(y, x, c);
        scene.colors[(static_cast<size_t>(y) * src.width + x) * 3 + c] =
            std::min(1.0f, std::max(0.0f, v));
      }
    }
  }
  scene.validate();
  return scene;
}

// Direct ray march against the voxel plane: nearest hit wins, misses get
// the background. This is the ground-truth generator for style training,
// fully independent of the radiance model.
inline Image<float> render_voxel_scene(const VoxelPlaneScene& scene,
                                       const Camera& camera,
                                       const Vec3<double>& background) {
  scene.validate();
  camera.validate();
  const Aabb box = scene.aabb();
  const double x_left = box.lo.x();
  const double y_top = box.hi.y();
  Image<float> out(camera.width, camera.height, 3);
  for (int py = 0; py < camera.height; ++py) {
    for (int px = 0; px < camera.width; ++px) {
      Ray ray = generate_ray(camera, px, py);
      auto hit = intersect_box(ray.origin, ray.direction, box);
      float rgb[3] = {static_cast<float>(background.x()),
                      static_cast<float>(background.y()),
                      static_cast<float>(background.z())};
      if (hit) {
        const Vec3<double> p = ray.origin + hit->first * ray.direction;
        int i = static_cast<int>(std::floor((p.x() - x_left) /
                                            scene.voxel_edge));
        int j = static_cast<int>(std::floor((y_top - p.y()) /
                                            scene.voxel_edge));
        i = std::min(scene.width - 1, std::max(0, i));
        j = std::min(scene.height - 1, std::max(0, j));
        const float* c = scene.color_at(i, j);
        rgb[0] = c[0];
        rgb[1] = c[1];
        rgb[2] = c[2];
      }
      out.at(py, px, 0) = rgb[0];
      out.at(py, px, 1) = rgb[1];
      out.at(py, px, 2) = rgb[2];
    }
  }
  return out;
}

// Camera on the +z axis whose pixel grid lands exactly on the voxel
// centers: pixel (i, j) sees voxel (i, j). distance is measured from the
// front face of the plane.
inline Camera fronto_parallel_camera(const VoxelPlaneScene& scene,
                                     double distance) {
  require(distance > 0, "fronto_parallel_camera: distance must be positive");
  Camera cam;
  cam.width = scene.width;
  cam.height = scene.height;
  cam.camera_angle_x =
      2.0 * std::atan(0.5 * scene.width * scene.voxel_edge / distance);
  cam.pose = Mat4<double>::Identity();
  cam.pose.block<3, 1>(0, 3) =
      scene.center +
      Vec3<double>(0, 0, 0.5 * scene.voxel_edge + distance);
  cam.validate();
  return cam;
}

// Random cameras on the +z hemisphere, all looking at the center. Azimuth
// is uniform over the full circle; elevation is uniform in
// [min_elevation_deg, max_elevation_deg] so the plane stays visible.
inline std::vector<Camera> sample_hemisphere_poses(
    int n, int width, int height, double fov_x, const Vec3<double>& center,
    double radius, Rng& rng, double min_elevation_deg = 15.0,
    double max_elevation_deg = 90.0) {
  require(n >= 1, "sample_hemisphere_poses: n must be >= 1");
  require(radius > 0, "sample_hemisphere_poses: radius must be positive");
  require(min_elevation_deg <= max_elevation_deg,
          "sample_hemisphere_poses: elevation range is empty");
  const double deg = M_PI / 180.0;
  std::vector<Camera> cams;
  cams.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double azimuth = rng.uniform(0.0, 2.0 * M_PI);
    const double elevation =
        rng.uniform(min_elevation_deg * deg, max_elevation_deg * deg);
    cams.push_back(
        orbit_camera(width, height, fov_x, center, radius, azimuth,
                     elevation));
  }
  return cams;
}

// Analytic test scene rendered in closed form: an axis-aligned cube with a
// flat color per face, or a flat-shaded sphere.
struct SyntheticScene {
  enum class Kind { kCube, kSphere };

  Kind kind = Kind::kCube;
  Vec3<double> center{0.5, 0.5, 0.5};
  double half_extent = 0.25;  // cube half edge, or sphere radius
  std::array<Vec3<float>, 6> face_colors = {
      Vec3<float>(0.9f, 0.15f, 0.15f), Vec3<float>(0.15f, 0.9f, 0.15f),
      Vec3<float>(0.15f, 0.15f, 0.9f), Vec3<float>(0.9f, 0.9f, 0.15f),
      Vec3<float>(0.9f, 0.15f, 0.9f), Vec3<float>(0.15f, 0.9f, 0.9f)};
  Vec3<float> sphere_color{0.8f, 0.3f, 0.2f};

  void validate() const {
    require(half_extent > 0, "synthetic scene: half_extent must be > 0");
  }
};

inline Image<float> render_synthetic_scene(const SyntheticScene& scene,
                                           const Camera& camera,
                                           const Vec3<double>& background) {
  scene.validate();
  camera.validate();
  Aabb box;
  box.lo = scene.center - Vec3<double>::Constant(scene.half_extent);
  box.hi = scene.center + Vec3<double>::Constant(scene.half_extent);
  Image<float> out(camera.width, camera.height, 3);
  for (int py = 0; py < camera.height; ++py) {
    for (int px = 0; px < camera.width; ++px) {
      Ray ray = generate_ray(camera, px, py);
      Vec3<float> rgb(static_cast<float>(background.x()),
                      static_cast<float>(background.y()),
                      static_cast<float>(background.z()));
      if (scene.kind == SyntheticScene::Kind::kCube) {
        auto hit = intersect_box(ray.origin, ray.direction, box);
        if (hit) {
          const Vec3<double> p =
              ray.origin + hit->first * ray.direction - scene.center;
          int axis = 0;
          for (int a = 1; a < 3; ++a) {
            if (std::abs(p[a]) > std::abs(p[axis])) axis = a;
          }
          rgb = scene.face_colors[2 * axis + (p[axis] < 0 ? 1 : 0)];
        }
      } else {
        const Vec3<double> oc = ray.origin - scene.center;
        const double b = oc.dot(ray.direction);
        const double c = oc.squaredNorm() - scene.half_extent *
                                                scene.half_extent;
        const double disc = b * b - c;
        if (disc >= 0 && -b - std::sqrt(disc) > 0) rgb = scene.sphere_color;
      }
      out.at(py, px, 0) = rgb.x();
      out.at(py, px, 1) = rgb.y();
      out.at(py, px, 2) = rgb.z();
    }
  }
  return out;
}

inline ViewDataset make_synthetic_dataset(
    const SyntheticScene& scene, int n_views, int width, int height,
    double fov_x, double radius, Rng& rng,
    const Vec3<double>& background = Vec3<double>(1, 1, 1)) {
  ViewDataset ds;
  ds.background = background;
  auto cams = sample_hemisphere_poses(n_views, width, height, fov_x,
                                      scene.center, radius, rng);
  for (const auto& cam : cams) {
    View v;
    v.camera = cam;
    v.rgb = render_synthetic_scene(scene, cam, background);
    ds.views.push_back(std::move(v));
  }
  ds.validate();
  return ds;
}

inline ViewDataset make_style_dataset(
    const VoxelPlaneScene& scene, int n_views, int width, int height,
    double fov_x, double radius, Rng& rng,
    const Vec3<double>& background = Vec3<double>(1, 1, 1)) {
  ViewDataset ds;
  ds.background = background;
  auto cams = sample_hemisphere_poses(n_views, width, height, fov_x,
                                      scene.center, radius, rng);
  for (const auto& cam : cams) {
    View v;
    v.camera = cam;
    v.rgb = render_voxel_scene(scene, cam, background);
    ds.views.push_back(std::move(v));
  }
  ds.validate();
  return ds;
}

}  // namespace voxelstyle

#endif  // VOXELSTYLE_STYLE_SCENE_HPP_
