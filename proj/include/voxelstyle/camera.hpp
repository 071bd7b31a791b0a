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

#ifndef VOXELSTYLE_CAMERA_HPP_
#define VOXELSTYLE_CAMERA_HPP_

#include <optional>

#include "voxelstyle/common.hpp"

namespace voxelstyle {

// Pinhole camera with a camera-to-world pose. The camera looks along its
// local -z axis with +x right and +y up, the NeRF-Synthetic convention.
struct Camera {
  int width = 0;
  int height = 0;
  double camera_angle_x = 0.0;  // horizontal field of view, radians
  Mat4<double> pose = Mat4<double>::Identity();

  double focal() const {
    return 0.5 * width / std::tan(0.5 * camera_angle_x);
  }

  void validate() const {
    require(width >= 1 && height >= 1, "camera: image dimensions must be >= 1");
    require(camera_angle_x > 0 && camera_angle_x < 3.14159,
            "camera: field of view out of range");
    Mat3<double> r = pose.block<3, 3>(0, 0);
    Mat3<double> err = r.transpose() * r - Mat3<double>::Identity();
    require(err.cwiseAbs().maxCoeff() < 1e-4,
            "camera: pose rotation is not orthonormal");
  }
};

struct Ray {
  Vec3<double> origin;
  Vec3<double> direction;  // unit length
  double t_near = 0.0;
  double t_far = 0.0;
};

// Ray through a pixel center. t_near/t_far are left at zero; callers clip
// against the scene box.
inline Ray generate_ray(const Camera& cam, int px, int py) {
  if (px < 0 || px >= cam.width || py < 0 || py >= cam.height) {
    throw std::out_of_range("generate_ray: pixel outside image");
  }
  const double f = cam.focal();
  const double x = (px + 0.5 - 0.5 * cam.width) / f;
  const double y = -(py + 0.5 - 0.5 * cam.height) / f;
  Vec3<double> dir_cam(x, y, -1.0);
  Mat3<double> rot = cam.pose.block<3, 3>(0, 0);
  Ray ray;
  ray.origin = cam.pose.block<3, 1>(0, 3);
  ray.direction = (rot * dir_cam).normalized();
  return ray;
}

// Slab intersection with an axis-aligned box. Returns the parametric
// interval clipped to t >= 0, or nothing when the ray misses.
inline std::optional<std::pair<double, double>> intersect_box(
    const Vec3<double>& origin, const Vec3<double>& direction,
    const Aabb& box) {
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double o = origin[a];
    const double d = direction[a];
    if (std::abs(d) < 1e-12) {
      if (o < box.lo[a] || o > box.hi[a]) return std::nullopt;
      continue;
    }
    double ta = (box.lo[a] - o) / d;
    double tb = (box.hi[a] - o) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  if (!(t1 > t0)) return std::nullopt;
  return std::make_pair(t0, t1);
}

// Ray through a pixel, clipped to the scene box. Returns nothing when the
// ray misses the box entirely.
inline std::optional<Ray> generate_clipped_ray(const Camera& cam, int px,
                                               int py, const Aabb& box) {
  Ray ray = generate_ray(cam, px, py);
  auto hit = intersect_box(ray.origin, ray.direction, box);
  if (!hit) return std::nullopt;
  ray.t_near = hit->first;
  ray.t_far = hit->second;
  return ray;
}

// Camera on a sphere around a target, looking at the target, +z up. The
// standard orbit used for synthetic captures and turntable evaluation.
inline Mat4<double> look_at_pose(const Vec3<double>& eye,
                                 const Vec3<double>& target,
                                 const Vec3<double>& up_hint) {
  Vec3<double> back = (eye - target).normalized();  // camera +z
  Vec3<double> right = up_hint.cross(back);
  if (right.norm() < 1e-8) {
    right = Vec3<double>(1, 0, 0).cross(back);
    if (right.norm() < 1e-8) right = Vec3<double>(0, 1, 0).cross(back);
  }
  right.normalize();
  Vec3<double> up = back.cross(right);
  Mat4<double> pose = Mat4<double>::Identity();
  pose.block<3, 1>(0, 0) = right;
  pose.block<3, 1>(0, 1) = up;
  pose.block<3, 1>(0, 2) = back;
  pose.block<3, 1>(0, 3) = eye;
  return pose;
}

inline Camera orbit_camera(int width, int height, double fov_x,
                           const Vec3<double>& target, double radius,
                           double azimuth, double elevation) {
  Vec3<double> eye =
      target + radius * Vec3<double>(std::cos(elevation) * std::cos(azimuth),
                                     std::cos(elevation) * std::sin(azimuth),
                                     std::sin(elevation));
  Camera cam;
  cam.width = width;
  cam.height = height;
  cam.camera_angle_x = fov_x;
  cam.pose = look_at_pose(eye, target, Vec3<double>(0, 0, 1));
  cam.validate();
  return cam;
}

}  // namespace voxelstyle

#endif  // VOXELSTYLE_CAMERA_HPP_
