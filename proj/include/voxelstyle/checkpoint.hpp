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

#ifndef VOXELSTYLE_CHECKPOINT_HPP_
#define VOXELSTYLE_CHECKPOINT_HPP_

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "voxelstyle/image_io.hpp"
#include "voxelstyle/radiance_model.hpp"
#include "voxelstyle/trainer.hpp"

namespace voxelstyle {

inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  RadianceModel<float> model;
  uint64_t iteration = 0;
  TrainConfig config;
};

namespace detail {

inline void put_grid_spec(std::string& out, const HashGridSpec& g) {
  put_u32(out, static_cast<uint32_t>(g.levels));
  put_u32(out, g.table_size);
  put_u32(out, static_cast<uint32_t>(g.features_per_level));
  put_u32(out, static_cast<uint32_t>(g.base_resolution));
  put_f64(out, g.growth_factor);
  for (int i = 0; i < 3; ++i) put_f64(out, g.bounds.lo[i]);
  for (int i = 0; i < 3; ++i) put_f64(out, g.bounds.hi[i]);
}

inline HashGridSpec get_grid_spec(ByteReader& r) {
  HashGridSpec g;
  g.levels = r.i32();
  g.table_size = r.u32();
  g.features_per_level = r.i32();
  g.base_resolution = r.i32();
  g.growth_factor = r.f64();
  for (int i = 0; i < 3; ++i) g.bounds.lo[i] = r.f64();
  for (int i = 0; i < 3; ++i) g.bounds.hi[i] = r.f64();
  return g;
}

inline void put_tensor(std::string& out, const std::vector<float>& v) {
  put_u64(out, v.size());
  for (float x : v) put_f32(out, x);
}

inline void get_tensor(ByteReader& r, std::vector<float>& v,
                       const char* name) {
  const uint64_t n = r.u64();
  if (n != v.size()) {
    throw std::runtime_error(std::string("checkpoint: ") + name +
                             " tensor size mismatch");
  }
  for (auto& x : v) x = r.f32();
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const auto& m = ckpt.model;
  std::string out;
  out += "VXCK";
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, static_cast<uint32_t>(m.spec.geom_dim));
  detail::put_u32(out, static_cast<uint32_t>(m.spec.density_hidden));
  detail::put_u32(out, static_cast<uint32_t>(m.spec.color_hidden));
  for (int b = 0; b < kBranchCount; ++b) {
    detail::put_grid_spec(out, m.branches[b].grid_spec);
  }
  detail::put_u64(out, ckpt.iteration);
  const TrainConfig& c = ckpt.config;
  detail::put_u32(out, static_cast<uint32_t>(c.iterations));
  detail::put_u32(out, static_cast<uint32_t>(c.rays_per_batch_per_scene));
  detail::put_u32(out, static_cast<uint32_t>(c.n_samples));
  detail::put_f64(out, c.lr_hash);
  detail::put_f64(out, c.lr_mlp);
  detail::put_f64(out, c.beta1);
  detail::put_f64(out, c.beta2);
  detail::put_f64(out, c.adam_eps);
  detail::put_f64(out, c.huber_delta);
  detail::put_u64(out, c.seed);
  detail::put_u32(out, static_cast<uint32_t>(c.threads));
  detail::put_u32(out, static_cast<uint32_t>(c.progress_every));
  detail::put_u32(out, static_cast<uint32_t>(c.checkpoint_every));
  for (int b = 0; b < kBranchCount; ++b) {
    for (const auto& t : m.branches[b].grid.tables) detail::put_tensor(out, t);
    for (const auto& w : m.branches[b].density_mlp.weights)
      detail::put_tensor(out, w);
    for (const auto& bias : m.branches[b].density_mlp.biases)
      detail::put_tensor(out, bias);
  }
  for (const auto& w : m.color_mlp.weights) detail::put_tensor(out, w);
  for (const auto& bias : m.color_mlp.biases) detail::put_tensor(out, bias);
  detail::write_file(path, out, "checkpoint");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  detail::ByteReader r(detail::read_file(path, "checkpoint"), "checkpoint");
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, "VXCK", 4) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  const uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version) + " in " + path);
  }
  ModelSpec spec;
  spec.geom_dim = r.i32();
  spec.density_hidden = r.i32();
  spec.color_hidden = r.i32();
  HashGridSpec grids[kBranchCount];
  for (int b = 0; b < kBranchCount; ++b) grids[b] = detail::get_grid_spec(r);

  Checkpoint ckpt;
  ckpt.iteration = r.u64();
  TrainConfig& c = ckpt.config;
  c.iterations = r.i32();
  c.rays_per_batch_per_scene = r.i32();
  c.n_samples = r.i32();
  c.lr_hash = r.f64();
  c.lr_mlp = r.f64();
  c.beta1 = r.f64();
  c.beta2 = r.f64();
  c.adam_eps = r.f64();
  c.huber_delta = r.f64();
  c.seed = r.u64();
  c.threads = r.i32();
  c.progress_every = r.i32();
  c.checkpoint_every = r.i32();

  const bool same_grids =
      grids[0].levels == grids[1].levels &&
      grids[0].table_size == grids[1].table_size &&
      grids[0].features_per_level == grids[1].features_per_level &&
      grids[0].base_resolution == grids[1].base_resolution &&
      grids[0].growth_factor == grids[1].growth_factor;
  if (!same_grids) {
    throw std::runtime_error(
        "checkpoint: per-branch grid specs differ; not supported");
  }
  Rng rng(0);
  ckpt.model = RadianceModel<float>::init(grids[0], spec, rng);
  auto& m = ckpt.model;
  for (int b = 0; b < kBranchCount; ++b) {
    m.branches[b].grid_spec = grids[b];
    for (auto& t : m.branches[b].grid.tables) {
      detail::get_tensor(r, t, "hash table");
    }
    for (auto& w : m.branches[b].density_mlp.weights) {
      detail::get_tensor(r, w, "density weight");
    }
    for (auto& bias : m.branches[b].density_mlp.biases) {
      detail::get_tensor(r, bias, "density bias");
    }
  }
  for (auto& w : m.color_mlp.weights) detail::get_tensor(r, w, "color weight");
  for (auto& bias : m.color_mlp.biases) {
    detail::get_tensor(r, bias, "color bias");
  }
  if (!r.at_end()) {
    throw std::runtime_error("checkpoint: trailing bytes in " + path);
  }
  return ckpt;
}

}  // namespace voxelstyle

#endif  // VOXELSTYLE_CHECKPOINT_HPP_
