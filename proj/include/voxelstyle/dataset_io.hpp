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

#ifndef VOXELSTYLE_DATASET_IO_HPP_
#define VOXELSTYLE_DATASET_IO_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "voxelstyle/consistency.hpp"
#include "voxelstyle/dataset.hpp"
#include "voxelstyle/image_io.hpp"
#include "voxelstyle/stylize.hpp"

namespace voxelstyle {

namespace detail {

inline nlohmann::json parse_manifest(const std::string& path) {
  const std::string text = read_file(path, "dataset");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("dataset: manifest parse error in " + path +
                             ": " + e.what());
  }
  require(j.is_object(), "dataset: manifest root must be an object");
  require(j.contains("camera_angle_x"),
          "dataset: manifest missing camera_angle_x");
  require(j.contains("frames") && j["frames"].is_array(),
          "dataset: manifest missing frames array");
  return j;
}

// The path a manifest argument denotes: either the json itself or a
// directory holding transforms.json.
inline std::filesystem::path resolve_manifest_path(const std::string& path) {
  std::filesystem::path p(path);
  if (std::filesystem::is_directory(p)) return p / "transforms.json";
  return p;
}

inline Mat4<double> pose_from_json(const nlohmann::json& mat) {
  require(mat.is_array() && mat.size() == 4,
          "dataset: transform_matrix must be 4x4");
  Mat4<double> pose;
  for (int r = 0; r < 4; ++r) {
    const auto& row = mat[r];
    require(row.is_array() && row.size() == 4,
            "dataset: transform_matrix must be 4x4");
    for (int c = 0; c < 4; ++c) {
      require(row[c].is_number(),
              "dataset: transform_matrix entries must be numbers");
      pose(r, c) = row[c].get<double>();
    }
  }
  return pose;
}

inline nlohmann::json pose_to_json(const Mat4<double>& pose) {
  nlohmann::json mat = nlohmann::json::array();
  for (int r = 0; r < 4; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < 4; ++c) row.push_back(pose(r, c));
    mat.push_back(row);
  }
  return mat;
}

// file_path entries follow the NeRF-Synthetic habit of omitting the
// extension; accept both spellings.
inline std::filesystem::path resolve_frame_image(
    const std::filesystem::path& base, const std::string& file_path) {
  std::filesystem::path p(file_path);
  if (p.is_relative()) p = base / p;
  if (std::filesystem::exists(p)) return p;
  std::filesystem::path with_ext = p;
  with_ext += ".png";
  if (std::filesystem::exists(with_ext)) return with_ext;
  throw std::runtime_error("dataset: image not found: " + p.string());
}

inline Image<float> to_rgb(const Image<float>& img,
                           const Vec3<double>& background) {
  if (img.channels == 3) return img;
  Image<float> rgb(img.width, img.height, 3);
  const float bg[3] = {static_cast<float>(background.x()),
                       static_cast<float>(background.y()),
                       static_cast<float>(background.z())};
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (img.channels == 1) {
        const float v = img.at(y, x, 0);
        rgb.at(y, x, 0) = rgb.at(y, x, 1) = rgb.at(y, x, 2) = v;
      } else {
        const float a = img.at(y, x, 3);
        for (int c = 0; c < 3; ++c) {
          rgb.at(y, x, c) = a * img.at(y, x, c) + (1.0f - a) * bg[c];
        }
      }
    }
  }
  return rgb;
}

}  // namespace detail

// Reads a transforms.json-style dataset: camera_angle_x plus per-frame
// file_path and camera-to-world transform_matrix. Poses pass through
// bit-exactly. Images with alpha are composited over the background.
inline ViewDataset load_dataset(
    const std::string& path,
    const Vec3<double>& background = Vec3<double>(1, 1, 1)) {
  const auto manifest_path = detail::resolve_manifest_path(path);
  const auto j = detail::parse_manifest(manifest_path.string());
  const double camera_angle_x = j["camera_angle_x"].get<double>();
  const auto base = manifest_path.parent_path();

  ViewDataset ds;
  ds.background = background;
  for (const auto& frame : j["frames"]) {
    require(frame.contains("file_path") && frame.contains("transform_matrix"),
            "dataset: frame missing file_path or transform_matrix");
    const auto img_path = detail::resolve_frame_image(
        base, frame["file_path"].get<std::string>());
    View v;
    v.rgb = detail::to_rgb(read_png(img_path.string()), background);
    v.camera.width = v.rgb.width;
    v.camera.height = v.rgb.height;
    v.camera.camera_angle_x = camera_angle_x;
    v.camera.pose = detail::pose_from_json(frame["transform_matrix"]);
    ds.views.push_back(std::move(v));
  }
  ds.validate();
  return ds;
}

// Cameras only; image files are not touched. Resolution comes from the
// manifest's optional top-level "w"/"h", else from the fallback arguments.
inline std::vector<Camera> load_poses(const std::string& path,
                                      int fallback_width = 0,
                                      int fallback_height = 0) {
  const auto manifest_path = detail::resolve_manifest_path(path);
  const auto j = detail::parse_manifest(manifest_path.string());
  int width = fallback_width, height = fallback_height;
  if (j.contains("w")) width = j["w"].get<int>();
  if (j.contains("h")) height = j["h"].get<int>();
  require(width >= 1 && height >= 1,
          "poses: manifest has no resolution; pass --width/--height");
  std::vector<Camera> cams;
  for (const auto& frame : j["frames"]) {
    require(frame.contains("transform_matrix"),
            "poses: frame missing transform_matrix");
    Camera cam;
    cam.width = width;
    cam.height = height;
    cam.camera_angle_x = j["camera_angle_x"].get<double>();
    cam.pose = detail::pose_from_json(frame["transform_matrix"]);
    cam.validate();
    cams.push_back(cam);
  }
  require(!cams.empty(), "poses: no frames");
  return cams;
}

// Writes dir/transforms.json plus one 8-bit PNG per view. All views must
// share camera_angle_x and resolution.
inline void save_dataset(const std::string& dir, const ViewDataset& ds) {
  ds.validate();
  const double angle = ds.views.front().camera.camera_angle_x;
  const int w = ds.views.front().camera.width;
  const int h = ds.views.front().camera.height;
  for (const auto& v : ds.views) {
    require(v.camera.camera_angle_x == angle,
            "dataset: views disagree on camera_angle_x");
    require(v.camera.width == w && v.camera.height == h,
            "dataset: views disagree on resolution");
  }
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["camera_angle_x"] = angle;
  j["w"] = w;
  j["h"] = h;
  j["frames"] = nlohmann::json::array();
  for (size_t k = 0; k < ds.views.size(); ++k) {
    const std::string name = "r_" + std::to_string(k);
    write_png((std::filesystem::path(dir) / (name + ".png")).string(),
              ds.views[k].rgb);
    nlohmann::json frame;
    frame["file_path"] = "./" + name;
    frame["transform_matrix"] = detail::pose_to_json(ds.views[k].camera.pose);
    j["frames"].push_back(frame);
  }
  detail::write_file((std::filesystem::path(dir) / "transforms.json").string(),
                     j.dump(2), "dataset");
}

// A rendered orbit with depth and opacity, the input to consistency
// scoring. Depth and opacity go to raw float files for exact round trips.
inline void save_render_sequence(const std::string& dir,
                                 const std::vector<PosedRender<float>>& seq) {
  require(!seq.empty(), "render sequence: empty");
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["camera_angle_x"] = seq.front().camera.camera_angle_x;
  j["w"] = seq.front().camera.width;
  j["h"] = seq.front().camera.height;
  j["frames"] = nlohmann::json::array();
  for (size_t k = 0; k < seq.size(); ++k) {
    const std::string name = "r_" + std::to_string(k);
    const auto base = std::filesystem::path(dir);
    write_png((base / (name + ".png")).string(), seq[k].render.rgb);
    write_raw_image((base / (name + "_depth.raw")).string(),
                    seq[k].render.depth);
    write_raw_image((base / (name + "_opacity.raw")).string(),
                    seq[k].render.opacity);
    nlohmann::json frame;
    frame["file_path"] = "./" + name;
    frame["transform_matrix"] = detail::pose_to_json(seq[k].camera.pose);
    j["frames"].push_back(frame);
  }
  detail::write_file((std::filesystem::path(dir) / "transforms.json").string(),
                     j.dump(2), "render sequence");
}

inline std::vector<PosedRender<float>> load_render_sequence(
    const std::string& dir) {
  const auto manifest_path = detail::resolve_manifest_path(dir);
  const auto j = detail::parse_manifest(manifest_path.string());
  const auto base = manifest_path.parent_path();
  require(j.contains("w") && j.contains("h"),
          "render sequence: manifest missing resolution");
  std::vector<PosedRender<float>> seq;
  for (const auto& frame : j["frames"]) {
    require(frame.contains("file_path") && frame.contains("transform_matrix"),
            "render sequence: frame missing file_path or transform_matrix");
    const std::string file_path = frame["file_path"].get<std::string>();
    PosedRender<float> v;
    v.render.rgb = detail::to_rgb(
        read_png(detail::resolve_frame_image(base, file_path).string()),
        Vec3<double>(1, 1, 1));
    std::filesystem::path stem(file_path);
    if (stem.is_relative()) stem = base / stem;
    v.render.depth = read_raw_image(stem.string() + "_depth.raw");
    v.render.opacity = read_raw_image(stem.string() + "_opacity.raw");
    v.camera.width = v.render.rgb.width;
    v.camera.height = v.render.rgb.height;
    v.camera.camera_angle_x = j["camera_angle_x"].get<double>();
    v.camera.pose = detail::pose_from_json(frame["transform_matrix"]);
    v.camera.validate();
    seq.push_back(std::move(v));
  }
  require(!seq.empty(), "render sequence: no frames");
  return seq;
}

// Cached AdaIN reference statistics for one checkpoint.
struct StyleMoments {
  FeatureMoments content;
  FeatureMoments style;
  int n_voxels = 0;
  std::optional<double> density_mask_threshold;
};

inline void save_style_moments(const std::string& path,
                               const StyleMoments& m) {
  m.content.validate();
  m.style.validate();
  nlohmann::json j;
  j["n_voxels"] = m.n_voxels;
  if (m.density_mask_threshold) {
    j["density_mask_threshold"] = *m.density_mask_threshold;
  } else {
    j["density_mask_threshold"] = nullptr;
  }
  j["content"]["mu"] = m.content.mu;
  j["content"]["sigma"] = m.content.sigma;
  j["style"]["mu"] = m.style.mu;
  j["style"]["sigma"] = m.style.sigma;
  detail::write_file(path, j.dump(2), "moments");
}

inline StyleMoments load_style_moments(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path, "moments"));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("moments: parse error in " + path + ": " +
                             e.what());
  }
  StyleMoments m;
  require(j.contains("content") && j.contains("style"),
          "moments: missing content or style block");
  m.n_voxels = j.value("n_voxels", 0);
  if (j.contains("density_mask_threshold") &&
      !j["density_mask_threshold"].is_null()) {
    m.density_mask_threshold = j["density_mask_threshold"].get<double>();
  }
  m.content.mu = j["content"]["mu"].get<std::vector<double>>();
  m.content.sigma = j["content"]["sigma"].get<std::vector<double>>();
  m.style.mu = j["style"]["mu"].get<std::vector<double>>();
  m.style.sigma = j["style"]["sigma"].get<std::vector<double>>();
  m.content.validate();
  m.style.validate();
  require(m.content.mu.size() == m.style.mu.size(),
          "moments: content/style dimension mismatch");
  return m;
}

}  // namespace voxelstyle

#endif  // VOXELSTYLE_DATASET_IO_HPP_
