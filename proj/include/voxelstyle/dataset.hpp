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

#ifndef VOXELSTYLE_DATASET_HPP_
#define VOXELSTYLE_DATASET_HPP_

#include <vector>

#include "voxelstyle/camera.hpp"
#include "voxelstyle/image.hpp"

namespace voxelstyle {

// One posed training view: camera plus its ground-truth RGB image.
struct View {
  Camera camera;
  Image<float> rgb;  // H x W x 3 in [0,1]
};

// A posed multi-view capture of one scene.
struct ViewDataset {
  std::vector<View> views;
  Vec3<double> background{1.0, 1.0, 1.0};
  Aabb bounds = Aabb::unit_cube();

  void validate() const {
    require(!views.empty(), "dataset: no views");
    require(bounds.valid(), "dataset: bounds must be a non-empty box");
    for (const auto& v : views) {
      v.camera.validate();
      require(v.rgb.channels == 3, "dataset: views must be 3-channel rgb");
      require(v.rgb.width == v.camera.width &&
                  v.rgb.height == v.camera.height,
              "dataset: image size does not match camera");
      require(all_finite(v.rgb.data), "dataset: non-finite pixel values");
    }
  }

  size_t total_pixels() const {
    size_t n = 0;
    for (const auto& v : views) n += v.rgb.pixel_count();
    return n;
  }
};

}  // namespace voxelstyle

#endif  // VOXELSTYLE_DATASET_HPP_
