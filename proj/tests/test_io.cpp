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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "voxelstyle/checkpoint.hpp"
#include "voxelstyle/dataset_io.hpp"
#include "voxelstyle/image_io.hpp"
#include "voxelstyle/volume_render.hpp"

namespace voxelstyle {
namespace {

namespace fs = std::filesystem;

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::path(::testing::TempDir()) /
           (std::string("voxelstyle_io_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const {
    return (dir_ / name).string();
  }

  fs::path dir_;
};

Image<float> RandomImage(int w, int h, int c, uint64_t seed) {
  Rng rng(seed);
  Image<float> img(w, h, c);
  for (auto& v : img.data) v = static_cast<float>(rng.uniform(0.0, 1.0));
  return img;
}

std::string Slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  EXPECT_TRUE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void Dump(const std::string& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  ASSERT_TRUE(out.good());
}

TEST_F(IoTest, PngRoundTripWithinQuantization) {
  const auto img = RandomImage(9, 7, 3, 11);
  write_png(path("a.png"), img);
  const auto back = read_png(path("a.png"));
  ASSERT_EQ(back.width, 9);
  ASSERT_EQ(back.height, 7);
  ASSERT_EQ(back.channels, 3);
  for (size_t i = 0; i < img.data.size(); ++i) {
    EXPECT_NEAR(back.data[i], img.data[i], 0.5f / 255.0f + 1e-6f);
  }
}

TEST_F(IoTest, PngExactOnQuantizedValues) {
  Image<float> img(16, 16, 3);
  int k = 0;
  for (auto& v : img.data) v = static_cast<float>((k++ % 256) / 255.0);
  write_png(path("q.png"), img);
  const auto back = read_png(path("q.png"));
  for (size_t i = 0; i < img.data.size(); ++i) {
    EXPECT_EQ(back.data[i], img.data[i]) << "sample " << i;
  }
}

TEST_F(IoTest, PngClampsOutOfRange) {
  Image<float> img(2, 1, 3);
  for (int c = 0; c < 3; ++c) {
    img.at(0, 0, c) = -0.25f;
    img.at(0, 1, c) = 1.75f;
  }
  write_png(path("c.png"), img);
  const auto back = read_png(path("c.png"));
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(back.at(0, 0, c), 0.0f);
    EXPECT_EQ(back.at(0, 1, c), 1.0f);
  }
}

TEST_F(IoTest, PngGrayAndRgbaKeepChannelCount) {
  const auto gray = RandomImage(5, 4, 1, 3);
  write_png(path("g.png"), gray);
  const auto gray_back = read_png(path("g.png"));
  EXPECT_EQ(gray_back.channels, 1);
  EXPECT_EQ(gray_back.width, 5);
  EXPECT_EQ(gray_back.height, 4);

  const auto rgba = RandomImage(5, 4, 4, 4);
  write_png(path("r.png"), rgba);
  const auto rgba_back = read_png(path("r.png"));
  EXPECT_EQ(rgba_back.channels, 4);
  for (size_t i = 0; i < rgba.data.size(); ++i) {
    EXPECT_NEAR(rgba_back.data[i], rgba.data[i], 0.5f / 255.0f + 1e-6f);
  }
}

TEST_F(IoTest, PngMissingFileThrows) {
  EXPECT_THROW(read_png(path("nope.png")), std::runtime_error);
}

TEST_F(IoTest, RawImageRoundTripIsBitExact) {
  Image<float> img(6, 5, 1);
  Rng rng(9);
  for (auto& v : img.data) v = static_cast<float>(rng.uniform(-3.0, 40.0));
  img.data[0] = 0.0f;
  img.data[1] = -0.0f;
  img.data[2] = 1.0f / 3.0f;
  write_raw_image(path("d.raw"), img);
  const auto back = read_raw_image(path("d.raw"));
  ASSERT_EQ(back.width, img.width);
  ASSERT_EQ(back.height, img.height);
  ASSERT_EQ(back.channels, img.channels);
  for (size_t i = 0; i < img.data.size(); ++i) {
    EXPECT_EQ(back.data[i], img.data[i]);
  }
}

TEST_F(IoTest, RawImageRejectsCorruption) {
  const auto img = RandomImage(4, 3, 1, 5);
  write_raw_image(path("d.raw"), img);
  const std::string good = Slurp(path("d.raw"));

  std::string bad_magic = good;
  bad_magic[0] = 'Z';
  Dump(path("m.raw"), bad_magic);
  EXPECT_THROW(read_raw_image(path("m.raw")), std::runtime_error);

  std::string bad_version = good;
  bad_version[4] = 9;
  Dump(path("v.raw"), bad_version);
  EXPECT_THROW(read_raw_image(path("v.raw")), std::runtime_error);

  Dump(path("t.raw"), good.substr(0, good.size() - 3));
  EXPECT_THROW(read_raw_image(path("t.raw")), std::runtime_error);

  Dump(path("x.raw"), good + "!");
  EXPECT_THROW(read_raw_image(path("x.raw")), std::runtime_error);

  EXPECT_THROW(read_raw_image(path("missing.raw")), std::runtime_error);
}

HashGridSpec CkptGrid() {
  HashGridSpec g;
  g.levels = 3;
  g.table_size = 1u << 9;
  g.features_per_level = 2;
  g.base_resolution = 4;
  g.growth_factor = 1.5;
  return g;
}

Checkpoint MakeCheckpoint(uint64_t seed) {
  ModelSpec spec;
  spec.geom_dim = 4;
  spec.density_hidden = 8;
  spec.color_hidden = 8;
  Rng rng(seed);
  Checkpoint ckpt;
  ckpt.model = RadianceModel<float>::init(CkptGrid(), spec, rng);
  Rng noise(seed + 1);
  auto fill = [&](std::vector<float>& v) {
    for (auto& x : v) x = static_cast<float>(noise.uniform(-0.7, 0.7));
  };
  for (int b = 0; b < kBranchCount; ++b) {
    for (auto& t : ckpt.model.branches[b].grid.tables) fill(t);
    for (auto& w : ckpt.model.branches[b].density_mlp.weights) fill(w);
    for (auto& bias : ckpt.model.branches[b].density_mlp.biases) fill(bias);
  }
  for (auto& w : ckpt.model.color_mlp.weights) fill(w);
  for (auto& bias : ckpt.model.color_mlp.biases) fill(bias);
  ckpt.iteration = 777;
  ckpt.config.iterations = 123;
  ckpt.config.rays_per_batch_per_scene = 17;
  ckpt.config.n_samples = 33;
  ckpt.config.lr_hash = 0.0123;
  ckpt.config.lr_mlp = 4.5e-4;
  ckpt.config.huber_delta = 0.25;
  ckpt.config.seed = 99;
  return ckpt;
}

TEST_F(IoTest, CheckpointRoundTripIsBitExact) {
  const auto ckpt = MakeCheckpoint(21);
  save_checkpoint(path("m.ckpt"), ckpt);
  const auto back = load_checkpoint(path("m.ckpt"));

  EXPECT_EQ(back.iteration, ckpt.iteration);
  EXPECT_EQ(back.config.iterations, ckpt.config.iterations);
  EXPECT_EQ(back.config.rays_per_batch_per_scene,
            ckpt.config.rays_per_batch_per_scene);
  EXPECT_EQ(back.config.n_samples, ckpt.config.n_samples);
  EXPECT_EQ(back.config.lr_hash, ckpt.config.lr_hash);
  EXPECT_EQ(back.config.lr_mlp, ckpt.config.lr_mlp);
  EXPECT_EQ(back.config.huber_delta, ckpt.config.huber_delta);
  EXPECT_EQ(back.config.seed, ckpt.config.seed);

  EXPECT_EQ(back.model.spec.geom_dim, ckpt.model.spec.geom_dim);
  for (int b = 0; b < kBranchCount; ++b) {
    const auto& ga = ckpt.model.branches[b];
    const auto& gb = back.model.branches[b];
    EXPECT_EQ(gb.grid_spec.levels, ga.grid_spec.levels);
    EXPECT_EQ(gb.grid_spec.growth_factor, ga.grid_spec.growth_factor);
    EXPECT_EQ(gb.grid.tables, ga.grid.tables);
    EXPECT_EQ(gb.density_mlp.weights, ga.density_mlp.weights);
    EXPECT_EQ(gb.density_mlp.biases, ga.density_mlp.biases);
  }
  EXPECT_EQ(back.model.color_mlp.weights, ckpt.model.color_mlp.weights);
  EXPECT_EQ(back.model.color_mlp.biases, ckpt.model.color_mlp.biases);
}

TEST_F(IoTest, CheckpointRoundTripRendersIdentically) {
  const auto ckpt = MakeCheckpoint(22);
  save_checkpoint(path("m.ckpt"), ckpt);
  const auto back = load_checkpoint(path("m.ckpt"));

  const Camera cam = orbit_camera(10, 8, 0.7, Vec3<double>(0.5, 0.5, 0.5),
                                  1.4, 0.3, 0.2);
  RenderConfig cfg;
  cfg.n_samples = 16;
  cfg.threads = 1;
  for (BranchId branch : {BranchId::kContent, BranchId::kStyle}) {
    const auto a = render_image(ckpt.model, branch, cam, cfg);
    const auto b = render_image(back.model, branch, cam, cfg);
    EXPECT_EQ(a.rgb.data, b.rgb.data);
    EXPECT_EQ(a.depth.data, b.depth.data);
    EXPECT_EQ(a.opacity.data, b.opacity.data);
  }
}

TEST_F(IoTest, CheckpointRejectsCorruption) {
  const auto ckpt = MakeCheckpoint(23);
  save_checkpoint(path("m.ckpt"), ckpt);
  const std::string good = Slurp(path("m.ckpt"));

  std::string bad_magic = good;
  bad_magic[1] = 'Q';
  Dump(path("bm.ckpt"), bad_magic);
  EXPECT_THROW(load_checkpoint(path("bm.ckpt")), std::runtime_error);

  std::string bad_version = good;
  bad_version[4] = 42;
  Dump(path("bv.ckpt"), bad_version);
  EXPECT_THROW(load_checkpoint(path("bv.ckpt")), std::runtime_error);

  Dump(path("tr.ckpt"), good.substr(0, good.size() / 2));
  EXPECT_THROW(load_checkpoint(path("tr.ckpt")), std::runtime_error);

  Dump(path("xs.ckpt"), good + "zz");
  EXPECT_THROW(load_checkpoint(path("xs.ckpt")), std::runtime_error);

  EXPECT_THROW(load_checkpoint(path("missing.ckpt")), std::runtime_error);
}

ViewDataset MakeDataset(int n_views, int w, int h, uint64_t seed) {
  ViewDataset ds;
  for (int k = 0; k < n_views; ++k) {
    View v;
    v.camera = orbit_camera(w, h, 0.7, Vec3<double>(0.5, 0.5, 0.5), 1.3,
                            0.37 * k, 0.2 + 0.01 * k);
    v.rgb = RandomImage(w, h, 3, seed + k);
    ds.views.push_back(std::move(v));
  }
  return ds;
}

TEST_F(IoTest, DatasetSaveLoadKeepsPosesBitExact) {
  const auto ds = MakeDataset(4, 8, 6, 31);
  save_dataset(path("ds"), ds);
  const auto back = load_dataset(path("ds"));
  ASSERT_EQ(back.views.size(), ds.views.size());
  for (size_t k = 0; k < ds.views.size(); ++k) {
    EXPECT_EQ(back.views[k].camera.pose, ds.views[k].camera.pose);
    EXPECT_EQ(back.views[k].camera.camera_angle_x,
              ds.views[k].camera.camera_angle_x);
    EXPECT_EQ(back.views[k].camera.width, 8);
    EXPECT_EQ(back.views[k].camera.height, 6);
    for (size_t i = 0; i < ds.views[k].rgb.data.size(); ++i) {
      EXPECT_NEAR(back.views[k].rgb.data[i], ds.views[k].rgb.data[i],
                  0.5f / 255.0f + 1e-6f);
    }
  }
}

TEST_F(IoTest, DatasetLoadAcceptsManifestPathOrDirectory) {
  const auto ds = MakeDataset(2, 6, 5, 32);
  save_dataset(path("ds"), ds);
  const auto via_dir = load_dataset(path("ds"));
  const auto via_file = load_dataset(path("ds") + "/transforms.json");
  ASSERT_EQ(via_dir.views.size(), via_file.views.size());
  EXPECT_EQ(via_dir.views[0].camera.pose, via_file.views[0].camera.pose);
}

TEST_F(IoTest, MinimalHandWrittenDatasetLoads) {
  fs::create_directories(dir_ / "one");
  write_png((dir_ / "one" / "img.png").string(), RandomImage(7, 3, 3, 40));
  const std::string manifest = R"({
    "camera_angle_x": 0.691111,
    "frames": [
      {"file_path": "./img",
       "transform_matrix": [[1,0,0,0],[0,1,0,0],[0,0,1,2.5],[0,0,0,1]]}
    ]
  })";
  Dump((dir_ / "one" / "transforms.json").string(), manifest);
  const auto ds = load_dataset((dir_ / "one").string());
  ASSERT_EQ(ds.views.size(), 1u);
  EXPECT_EQ(ds.views[0].camera.width, 7);
  EXPECT_EQ(ds.views[0].camera.height, 3);
  EXPECT_EQ(ds.views[0].camera.camera_angle_x, 0.691111);
  EXPECT_EQ(ds.views[0].camera.pose(2, 3), 2.5);
}

TEST_F(IoTest, ManifestPosesPassThroughWithoutReorthonormalization) {
  // Slightly bent rotation, within the validator's tolerance. A loader
  // that re-orthonormalized would not reproduce it bit for bit.
  Mat4<double> pose = Mat4<double>::Identity();
  pose(0, 0) = 1.0 + 3e-5;
  pose(1, 2) = 2e-5;
  pose(2, 3) = 2.0;
  fs::create_directories(dir_ / "bent");
  write_png((dir_ / "bent" / "r_0.png").string(), RandomImage(4, 4, 3, 41));
  nlohmann::json j;
  j["camera_angle_x"] = 0.7;
  nlohmann::json frame;
  frame["file_path"] = "./r_0";
  frame["transform_matrix"] = detail::pose_to_json(pose);
  j["frames"] = nlohmann::json::array({frame});
  Dump((dir_ / "bent" / "transforms.json").string(), j.dump());
  const auto ds = load_dataset((dir_ / "bent").string());
  ASSERT_EQ(ds.views.size(), 1u);
  EXPECT_EQ(ds.views[0].camera.pose, pose);
}

TEST_F(IoTest, DatasetRejectsNon4x4Pose) {
  fs::create_directories(dir_ / "bad");
  write_png((dir_ / "bad" / "r_0.png").string(), RandomImage(4, 4, 3, 42));
  const std::string manifest = R"({
    "camera_angle_x": 0.7,
    "frames": [
      {"file_path": "./r_0",
       "transform_matrix": [[1,0,0,0],[0,1,0,0],[0,0,1,2.0]]}
    ]
  })";
  Dump((dir_ / "bad" / "transforms.json").string(), manifest);
  EXPECT_THROW(load_dataset((dir_ / "bad").string()), std::invalid_argument);
}

TEST_F(IoTest, DatasetMissingManifestOrImageThrows) {
  EXPECT_THROW(load_dataset(path("absent")), std::runtime_error);

  fs::create_directories(dir_ / "noimg");
  const std::string manifest = R"({
    "camera_angle_x": 0.7,
    "frames": [
      {"file_path": "./r_0",
       "transform_matrix": [[1,0,0,0],[0,1,0,0],[0,0,1,2.0],[0,0,0,1]]}
    ]
  })";
  Dump((dir_ / "noimg" / "transforms.json").string(), manifest);
  EXPECT_THROW(load_dataset((dir_ / "noimg").string()), std::runtime_error);
}

TEST_F(IoTest, RgbaFramesCompositeOverBackground) {
  Image<float> rgba(2, 1, 4);
  // Left pixel: solid color. Right pixel: half transparent.
  rgba.at(0, 0, 0) = 1.0f;
  rgba.at(0, 0, 1) = 0.0f;
  rgba.at(0, 0, 2) = 0.0f;
  rgba.at(0, 0, 3) = 1.0f;
  rgba.at(0, 1, 0) = 0.0f;
  rgba.at(0, 1, 1) = 0.0f;
  rgba.at(0, 1, 2) = 0.0f;
  rgba.at(0, 1, 3) = 0.5f;
  fs::create_directories(dir_ / "alpha");
  write_png((dir_ / "alpha" / "r_0.png").string(), rgba);
  const std::string manifest = R"({
    "camera_angle_x": 0.7,
    "frames": [
      {"file_path": "./r_0",
       "transform_matrix": [[1,0,0,0],[0,1,0,0],[0,0,1,2.0],[0,0,0,1]]}
    ]
  })";
  Dump((dir_ / "alpha" / "transforms.json").string(), manifest);

  const auto white =
      load_dataset((dir_ / "alpha").string(), Vec3<double>(1, 1, 1));
  EXPECT_NEAR(white.views[0].rgb.at(0, 0, 0), 1.0f, 1e-2f);
  EXPECT_NEAR(white.views[0].rgb.at(0, 0, 1), 0.0f, 1e-2f);
  EXPECT_NEAR(white.views[0].rgb.at(0, 1, 0), 0.5f, 1e-2f);

  const auto black =
      load_dataset((dir_ / "alpha").string(), Vec3<double>(0, 0, 0));
  EXPECT_NEAR(black.views[0].rgb.at(0, 1, 0), 0.0f, 1e-2f);
  EXPECT_EQ(black.background, Vec3<double>(0, 0, 0));
}

TEST_F(IoTest, LoadPosesUsesManifestResolutionThenFallback) {
  const auto ds = MakeDataset(3, 10, 9, 50);
  save_dataset(path("ds"), ds);
  const auto cams = load_poses(path("ds"));
  ASSERT_EQ(cams.size(), 3u);
  EXPECT_EQ(cams[0].width, 10);
  EXPECT_EQ(cams[0].height, 9);
  EXPECT_EQ(cams[2].pose, ds.views[2].camera.pose);

  // A manifest without w/h needs the fallback arguments.
  fs::create_directories(dir_ / "nowh");
  const std::string manifest = R"({
    "camera_angle_x": 0.7,
    "frames": [
      {"file_path": "./r_0",
       "transform_matrix": [[1,0,0,0],[0,1,0,0],[0,0,1,2.0],[0,0,0,1]]}
    ]
  })";
  Dump((dir_ / "nowh" / "transforms.json").string(), manifest);
  EXPECT_THROW(load_poses((dir_ / "nowh").string()), std::invalid_argument);
  const auto fb = load_poses((dir_ / "nowh").string(), 12, 11);
  ASSERT_EQ(fb.size(), 1u);
  EXPECT_EQ(fb[0].width, 12);
  EXPECT_EQ(fb[0].height, 11);
}

TEST_F(IoTest, RenderSequenceRoundTrip) {
  std::vector<PosedRender<float>> seq;
  for (int k = 0; k < 2; ++k) {
    PosedRender<float> v;
    v.camera = orbit_camera(6, 5, 0.7, Vec3<double>(0.5, 0.5, 0.5), 1.3,
                            0.4 * k, 0.25);
    v.render.rgb = RandomImage(6, 5, 3, 60 + k);
    v.render.depth = Image<float>(6, 5, 1);
    v.render.opacity = Image<float>(6, 5, 1);
    Rng rng(70 + k);
    for (auto& d : v.render.depth.data) {
      d = static_cast<float>(rng.uniform(0.5, 2.5));
    }
    for (auto& o : v.render.opacity.data) {
      o = static_cast<float>(rng.uniform(0.0, 1.0));
    }
    seq.push_back(std::move(v));
  }
  save_render_sequence(path("seq"), seq);
  const auto back = load_render_sequence(path("seq"));
  ASSERT_EQ(back.size(), seq.size());
  for (size_t k = 0; k < seq.size(); ++k) {
    EXPECT_EQ(back[k].camera.pose, seq[k].camera.pose);
    EXPECT_EQ(back[k].render.depth.data, seq[k].render.depth.data);
    EXPECT_EQ(back[k].render.opacity.data, seq[k].render.opacity.data);
    for (size_t i = 0; i < seq[k].render.rgb.data.size(); ++i) {
      EXPECT_NEAR(back[k].render.rgb.data[i], seq[k].render.rgb.data[i],
                  0.5f / 255.0f + 1e-6f);
    }
  }
}

TEST_F(IoTest, StyleMomentsRoundTripIsBitExact) {
  StyleMoments m;
  m.n_voxels = 64;
  m.density_mask_threshold = 0.01;
  m.content.mu = {0.1, 1.0 / 3.0, -7.25, 1e-17};
  m.content.sigma = {1e-6, 0.5, 123.456789012345678, 2.0};
  m.style.mu = {-0.3, 0.0, 5.5, 9.9};
  m.style.sigma = {0.25, 1.75, 1e-6, 3.5};
  save_style_moments(path("m.json"), m);
  const auto back = load_style_moments(path("m.json"));
  EXPECT_EQ(back.n_voxels, 64);
  ASSERT_TRUE(back.density_mask_threshold.has_value());
  EXPECT_EQ(*back.density_mask_threshold, 0.01);
  EXPECT_EQ(back.content.mu, m.content.mu);
  EXPECT_EQ(back.content.sigma, m.content.sigma);
  EXPECT_EQ(back.style.mu, m.style.mu);
  EXPECT_EQ(back.style.sigma, m.style.sigma);

  m.density_mask_threshold.reset();
  save_style_moments(path("m2.json"), m);
  const auto back2 = load_style_moments(path("m2.json"));
  EXPECT_FALSE(back2.density_mask_threshold.has_value());
}

TEST_F(IoTest, StyleMomentsRejectsMalformedFiles) {
  EXPECT_THROW(load_style_moments(path("missing.json")), std::runtime_error);
  Dump(path("garbage.json"), "not json at all {");
  EXPECT_THROW(load_style_moments(path("garbage.json")), std::runtime_error);
  Dump(path("mismatch.json"),
       R"({"n_voxels": 2, "density_mask_threshold": null,
           "content": {"mu": [0.0, 1.0], "sigma": [1.0, 1.0]},
           "style": {"mu": [0.0], "sigma": [1.0]}})");
  EXPECT_THROW(load_style_moments(path("mismatch.json")),
               std::invalid_argument);
}

}  // namespace
}  // namespace voxelstyle
