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

#ifndef VOXELSTYLE_CLI_HPP_
#define VOXELSTYLE_CLI_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "voxelstyle/checkpoint.hpp"
#include "voxelstyle/consistency.hpp"
#include "voxelstyle/dataset_io.hpp"
#include "voxelstyle/style_scene.hpp"
#include "voxelstyle/stylize.hpp"
#include "voxelstyle/trainer.hpp"
#include "voxelstyle/volume_render.hpp"

namespace voxelstyle {
namespace cli_detail {

namespace fs = std::filesystem;

inline Vec3<double> parse_rgb(const std::string& s) {
  std::vector<double> vals;
  size_t pos = 0;
  while (pos <= s.size()) {
    const size_t comma = s.find(',', pos);
    const std::string tok =
        s.substr(pos, comma == std::string::npos ? comma : comma - pos);
    try {
      size_t used = 0;
      vals.push_back(std::stod(tok, &used));
      require(used == tok.size(), "");
    } catch (...) {
      throw std::invalid_argument("background: expected r,g,b, got '" + s +
                                  "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  require(vals.size() == 1 || vals.size() == 3,
          "background: expected 1 or 3 comma-separated values");
  if (vals.size() == 1) return Vec3<double>::Constant(vals[0]);
  return Vec3<double>(vals[0], vals[1], vals[2]);
}

inline void write_text(const std::string& path, const std::string& text) {
  detail::write_file(path, text, "report");
}

// Grid and model hyperparameters shared by train.
struct ModelFlags {
  int levels = 8;
  int table_log2 = 14;
  int features = 2;
  int base_resolution = 16;
  double growth = 1.5;
  int geom_dim = 16;
  int density_hidden = 64;
  int color_hidden = 64;

  HashGridSpec grid() const {
    HashGridSpec g;
    g.levels = levels;
    require(table_log2 >= 1 && table_log2 <= 28,
            "train: table-log2 must be in [1, 28]");
    g.table_size = 1u << table_log2;
    g.features_per_level = features;
    g.base_resolution = base_resolution;
    g.growth_factor = growth;
    g.validate();
    return g;
  }

  ModelSpec model() const {
    ModelSpec m;
    m.geom_dim = geom_dim;
    m.density_hidden = density_hidden;
    m.color_hidden = color_hidden;
    m.validate();
    return m;
  }

  void add_flags(CLI::App* sub) {
    sub->add_option("--levels", levels, "hash grid levels");
    sub->add_option("--table-log2", table_log2,
                    "log2 of hash table rows per level");
    sub->add_option("--features", features, "features per level");
    sub->add_option("--base-res", base_resolution, "coarsest grid resolution");
    sub->add_option("--growth", growth, "per-level resolution growth factor");
    sub->add_option("--geom-dim", geom_dim, "geometry feature width");
    sub->add_option("--density-hidden", density_hidden,
                    "density mlp hidden width");
    sub->add_option("--color-hidden", color_hidden, "color mlp hidden width");
  }
};

struct MakeSyntheticOpts {
  std::string out;
  std::string kind = "cube";
  std::string background = "1,1,1";
  int views = 32;
  int width = 64;
  int height = 64;
  double fov = 0.7;
  double radius = 1.2;
  double half_extent = 0.25;
  uint64_t seed = 1;
};

inline void run_make_synthetic(const MakeSyntheticOpts& o) {
  SyntheticScene scene;
  scene.kind = o.kind == "sphere" ? SyntheticScene::Kind::kSphere
                                  : SyntheticScene::Kind::kCube;
  scene.half_extent = o.half_extent;
  Rng rng(o.seed);
  const auto ds =
      make_synthetic_dataset(scene, o.views, o.width, o.height, o.fov,
                             o.radius, rng, parse_rgb(o.background));
  save_dataset(o.out, ds);
  std::cout << "wrote " << ds.views.size() << " views to " << o.out << "\n";
}

struct MakeStyleSceneOpts {
  std::string image;
  std::string out;
  std::string background = "1,1,1";
  int views = 32;
  int width = 64;
  int height = 64;
  int max_edge = 128;
  double fov = 0.7;
  double radius = 1.2;
  uint64_t seed = 2;
};

inline void run_make_style_scene(const MakeStyleSceneOpts& o) {
  const auto bg = parse_rgb(o.background);
  const auto scene =
      image_to_voxel_scene(detail::to_rgb(read_png(o.image), bg), o.max_edge);
  Rng rng(o.seed);
  const auto ds = make_style_dataset(scene, o.views, o.width, o.height, o.fov,
                                     o.radius, rng, bg);
  save_dataset(o.out, ds);
  std::cout << "wrote " << ds.views.size() << " views (" << scene.width << "x"
            << scene.height << " voxel plane) to " << o.out << "\n";
}

struct TrainOpts {
  std::string content;
  std::string style;
  std::string out;
  std::string background = "1,1,1";
  TrainConfig cfg;
  ModelFlags model;
  int style_views = 32;
  int style_max_edge = 128;
  double style_fov = 0.7;
  double style_radius = 1.2;
};

inline ViewDataset load_style_input(const TrainOpts& o,
                                    const Vec3<double>& bg,
                                    const ViewDataset& content) {
  if (fs::is_directory(o.style) ||
      fs::path(o.style).extension() == ".json") {
    return load_dataset(o.style, bg);
  }
  const auto scene = image_to_voxel_scene(detail::to_rgb(read_png(o.style), bg),
                                          o.style_max_edge);
  Rng rng(o.cfg.seed + 1000003);
  const auto& cam = content.views.front().camera;
  return make_style_dataset(scene, o.style_views, cam.width, cam.height,
                            o.style_fov, o.style_radius, rng, bg);
}

inline void run_train(const TrainOpts& o) {
  o.cfg.validate();
  const auto bg = parse_rgb(o.background);
  const ViewDataset content = load_dataset(o.content, bg);
  const ViewDataset style = load_style_input(o, bg, content);
  Rng rng(o.cfg.seed);
  auto model = RadianceModel<float>::init(o.model.grid(), o.model.model(),
                                          rng);
  fs::create_directories(o.out);

  std::function<void(int, const RadianceModel<float>&)> on_checkpoint;
  if (o.cfg.checkpoint_every > 0) {
    on_checkpoint = [&](int iter, const RadianceModel<float>& m) {
      Checkpoint c;
      c.model = m;
      c.iteration = static_cast<uint64_t>(iter);
      c.config = o.cfg;
      save_checkpoint((fs::path(o.out) /
                       ("checkpoint_" + std::to_string(iter) + ".bin"))
                          .string(),
                      c);
    };
  }
  const auto result =
      train(model, content, style, o.cfg, &std::cout, on_checkpoint);

  Checkpoint final_ckpt;
  final_ckpt.model = model;
  final_ckpt.iteration = static_cast<uint64_t>(o.cfg.iterations);
  final_ckpt.config = o.cfg;
  const auto ckpt_path = (fs::path(o.out) / "checkpoint.bin").string();
  save_checkpoint(ckpt_path, final_ckpt);

  std::ostringstream log;
  log << "iter,loss_content,loss_style\n" << std::setprecision(17);
  for (size_t i = 0; i < result.loss_content.size(); ++i) {
    log << (i + 1) << "," << result.loss_content[i] << ","
        << result.loss_style[i] << "\n";
  }
  write_text((fs::path(o.out) / "loss_log.csv").string(), log.str());
  std::cout << "wrote " << ckpt_path << "\n";
}

// Shared camera/source flags for render and stylize.
struct RenderIoOpts {
  std::string checkpoint;
  std::string poses;
  std::string out;
  std::string background = "1,1,1";
  int samples = 128;
  int width = 0;
  int height = 0;
  int threads = 0;
  int orbit_views = 20;
  double orbit_radius = 1.2;
  double orbit_elevation_deg = 25.0;
  double fov = 0.7;

  void add_flags(CLI::App* sub, bool poses_required) {
    sub->add_option("--checkpoint", checkpoint, "model checkpoint file")
        ->required();
    auto* p = sub->add_option("--poses", poses,
                              "camera manifest (transforms.json style)");
    if (poses_required) p->required();
    sub->add_option("--out", out, "output directory")->required();
    sub->add_option("--background", background, "background color r,g,b");
    sub->add_option("--samples", samples, "samples per ray");
    sub->add_option("--width", width, "image width when poses carry none");
    sub->add_option("--height", height, "image height when poses carry none");
    sub->add_option("--threads", threads, "worker threads (0 = auto)");
    sub->add_option("--orbit-views", orbit_views,
                    "orbit length when --poses is omitted");
    sub->add_option("--orbit-radius", orbit_radius, "orbit camera distance");
    sub->add_option("--orbit-elevation-deg", orbit_elevation_deg,
                    "orbit elevation in degrees");
    sub->add_option("--fov", fov, "horizontal fov for generated orbits");
  }

  std::vector<Camera> cameras(const Aabb& bounds) const {
    if (!poses.empty()) return load_poses(poses, width, height);
    require(orbit_views >= 1, "render: orbit-views must be >= 1");
    const int w = width > 0 ? width : 64;
    const int h = height > 0 ? height : 64;
    const Vec3<double> center = 0.5 * (bounds.lo + bounds.hi);
    const double elev = orbit_elevation_deg * M_PI / 180.0;
    std::vector<Camera> cams;
    for (int k = 0; k < orbit_views; ++k) {
      const double az = 2.0 * M_PI * k / orbit_views;
      cams.push_back(
          orbit_camera(w, h, fov, center, orbit_radius, az, elev));
    }
    return cams;
  }

  RenderConfig config(const Aabb& bounds) const {
    RenderConfig rc;
    rc.n_samples = samples;
    rc.background = parse_rgb(background);
    rc.bounds = bounds;
    rc.threads = threads;
    return rc;
  }
};

struct RenderOpts {
  RenderIoOpts io;
  std::string branch = "content";
};

inline void run_render(const RenderOpts& o) {
  const auto ckpt = load_checkpoint(o.io.checkpoint);
  const BranchId branch =
      o.branch == "style" ? BranchId::kStyle : BranchId::kContent;
  const Aabb bounds =
      ckpt.model.branches[branch_index(branch)].grid_spec.bounds;
  const auto cams = o.io.cameras(bounds);
  const auto rc = o.io.config(bounds);
  std::vector<PosedRender<float>> seq;
  seq.reserve(cams.size());
  for (const auto& cam : cams) {
    seq.push_back({cam, render_image(ckpt.model, branch, cam, rc)});
  }
  save_render_sequence(o.io.out, seq);
  std::cout << "wrote " << seq.size() << " " << o.branch << " renders to "
            << o.io.out << "\n";
}

struct StylizeOpts {
  RenderIoOpts io;
  std::string direction = "content-to-style";
  std::string moments;
  double alpha = 1.0;
  int voxel_res = 128;
  double density_mask = 0.0;
  bool has_density_mask = false;
};

inline StyleMoments resolve_moments(const StylizeOpts& o,
                                    const RadianceModel<float>& model,
                                    bool* computed) {
  if (!o.moments.empty()) {
    *computed = false;
    return load_style_moments(o.moments);
  }
  *computed = true;
  std::optional<double> threshold;
  if (o.has_density_mask) threshold = o.density_mask;
  StyleMoments m;
  m.n_voxels = o.voxel_res;
  m.density_mask_threshold = threshold;
  for (BranchId b : {BranchId::kContent, BranchId::kStyle}) {
    VoxelGridSpec vspec;
    vspec.n_voxels = o.voxel_res;
    vspec.bounds = model.branches[branch_index(b)].grid_spec.bounds;
    auto& dst = b == BranchId::kContent ? m.content : m.style;
    dst = compute_model_moments(model, b, vspec, threshold, o.io.threads);
  }
  return m;
}

inline void run_stylize(const StylizeOpts& o) {
  StyleBlend blend;
  blend.alpha = o.alpha;
  blend.direction = o.direction == "style-to-content"
                        ? StyleDirection::kStyleToContent
                        : StyleDirection::kContentToStyle;
  blend.validate();

  const auto ckpt = load_checkpoint(o.io.checkpoint);
  bool computed = false;
  const StyleMoments moments = resolve_moments(o, ckpt.model, &computed);
  require(moments.content.mu.size() ==
              static_cast<size_t>(ckpt.model.spec.geom_dim),
          "stylize: moments dimension does not match the checkpoint");

  const BranchId branch = blend.direction == StyleDirection::kContentToStyle
                              ? BranchId::kContent
                              : BranchId::kStyle;
  const Aabb bounds =
      ckpt.model.branches[branch_index(branch)].grid_spec.bounds;
  const auto cams = o.io.cameras(bounds);
  const auto rc = o.io.config(bounds);
  std::vector<PosedRender<float>> seq;
  seq.reserve(cams.size());
  for (const auto& cam : cams) {
    seq.push_back({cam, render_stylized(ckpt.model, cam, blend,
                                        moments.content, moments.style, rc)});
  }
  save_render_sequence(o.io.out, seq);
  if (computed) {
    save_style_moments((fs::path(o.io.out) / "moments.json").string(),
                       moments);
  }
  std::cout << "wrote " << seq.size() << " stylized renders (alpha "
            << o.alpha << ", " << o.direction << ") to " << o.io.out << "\n";
}

struct ExtractFeaturesOpts {
  std::string checkpoint;
  std::string out;
  int voxel_res = 128;
  int threads = 0;
  double density_mask = 0.0;
  bool has_density_mask = false;
};

inline void run_extract_features(const ExtractFeaturesOpts& o) {
  const auto ckpt = load_checkpoint(o.checkpoint);
  std::optional<double> threshold;
  if (o.has_density_mask) threshold = o.density_mask;
  StyleMoments m;
  m.n_voxels = o.voxel_res;
  m.density_mask_threshold = threshold;
  for (BranchId b : {BranchId::kContent, BranchId::kStyle}) {
    VoxelGridSpec vspec;
    vspec.n_voxels = o.voxel_res;
    vspec.bounds = ckpt.model.branches[branch_index(b)].grid_spec.bounds;
    auto& dst = b == BranchId::kContent ? m.content : m.style;
    dst = compute_model_moments(ckpt.model, b, vspec, threshold, o.threads);
  }
  fs::create_directories(o.out);
  const auto path = (fs::path(o.out) / "moments.json").string();
  save_style_moments(path, m);
  std::cout << "wrote " << m.content.mu.size() << "-channel moments at "
            << o.voxel_res << "^3 voxels to " << path << "\n";
}

struct EvalConsistencyOpts {
  std::string renders;
  std::string out;
  std::vector<int> gaps{5, 15};
  double tolerance = kDefaultDepthTolerance;
  double opacity_threshold = kDefaultOpacityThreshold;
  int threads = 0;
};

inline void run_eval_consistency(const EvalConsistencyOpts& o) {
  const auto seq = load_render_sequence(o.renders);
  const auto scores = consistency_score(seq, o.gaps, o.tolerance,
                                        o.opacity_threshold, o.threads);
  const std::string text = format_consistency_report(scores);
  std::cout << text;
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_text((fs::path(o.out) / "report.txt").string(), text);
    write_text((fs::path(o.out) / "report.json").string(),
               consistency_report_json(scores));
    std::cout << "wrote report to " << o.out << "\n";
  }
}

}  // namespace cli_detail

// Command-line front end. Returns 0 on success, 2 on bad arguments or
// failed input validation, 1 on runtime failures (missing files,
// corrupted artifacts, diverged training).
inline int cli_main(int argc, char** argv) {
  using namespace cli_detail;
  CLI::App app{
      "two-branch hash-grid radiance fields with voxel-feature "
      "stylization and depth-warped consistency scoring"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "key=value config file; subcommand options live in a "
                 "[subcommand] section, flags override");

  MakeSyntheticOpts syn;
  auto* syn_cmd = app.add_subcommand(
      "make-synthetic", "render an analytic cube or sphere dataset");
  syn_cmd->fallthrough();
  syn_cmd->add_option("--out", syn.out, "output dataset directory")
      ->required();
  syn_cmd->add_option("--kind", syn.kind, "scene kind")
      ->check(CLI::IsMember({"cube", "sphere"}));
  syn_cmd->add_option("--views", syn.views, "number of views");
  syn_cmd->add_option("--width", syn.width, "image width");
  syn_cmd->add_option("--height", syn.height, "image height");
  syn_cmd->add_option("--fov", syn.fov, "horizontal fov in radians");
  syn_cmd->add_option("--radius", syn.radius, "camera orbit radius");
  syn_cmd->add_option("--half-extent", syn.half_extent,
                      "object half extent in scene units");
  syn_cmd->add_option("--seed", syn.seed, "pose sampling seed");
  syn_cmd->add_option("--background", syn.background,
                      "background color r,g,b");
  syn_cmd->callback([&] { run_make_synthetic(syn); });

  MakeStyleSceneOpts sty;
  auto* sty_cmd = app.add_subcommand(
      "make-style-scene", "lift an image into a voxel-plane dataset");
  sty_cmd->fallthrough();
  sty_cmd->add_option("--image", sty.image, "style image (png)")->required();
  sty_cmd->add_option("--out", sty.out, "output dataset directory")
      ->required();
  sty_cmd->add_option("--views", sty.views, "number of views");
  sty_cmd->add_option("--width", sty.width, "image width");
  sty_cmd->add_option("--height", sty.height, "image height");
  sty_cmd->add_option("--max-edge", sty.max_edge,
                      "downsample long image edge to this many voxels");
  sty_cmd->add_option("--fov", sty.fov, "horizontal fov in radians");
  sty_cmd->add_option("--radius", sty.radius, "camera orbit radius");
  sty_cmd->add_option("--seed", sty.seed, "pose sampling seed");
  sty_cmd->add_option("--background", sty.background,
                      "background color r,g,b");
  sty_cmd->callback([&] { run_make_style_scene(sty); });

  TrainOpts tr;
  auto* tr_cmd = app.add_subcommand(
      "train", "jointly fit the two-branch model on content and style");
  tr_cmd->fallthrough();
  tr_cmd->add_option("--content", tr.content, "content dataset directory")
      ->required();
  tr_cmd->add_option("--style", tr.style,
                     "style dataset directory or a style image (png)")
      ->required();
  tr_cmd->add_option("--out", tr.out, "output directory")->required();
  tr_cmd->add_option("--background", tr.background,
                     "background color r,g,b");
  tr_cmd->add_option("--iterations", tr.cfg.iterations, "training steps");
  tr_cmd->add_option("--rays", tr.cfg.rays_per_batch_per_scene,
                     "rays per batch per scene");
  tr_cmd->add_option("--samples", tr.cfg.n_samples, "samples per ray");
  tr_cmd->add_option("--lr-hash", tr.cfg.lr_hash, "hash table learning rate");
  tr_cmd->add_option("--lr-mlp", tr.cfg.lr_mlp, "mlp learning rate");
  tr_cmd->add_option("--beta1", tr.cfg.beta1, "adam beta1");
  tr_cmd->add_option("--beta2", tr.cfg.beta2, "adam beta2");
  tr_cmd->add_option("--adam-eps", tr.cfg.adam_eps, "adam epsilon");
  tr_cmd->add_option("--huber-delta", tr.cfg.huber_delta,
                     "huber loss threshold");
  tr_cmd->add_option("--seed", tr.cfg.seed, "training seed");
  tr_cmd->add_option("--threads", tr.cfg.threads, "worker threads (0 = auto)");
  tr_cmd->add_option("--progress-every", tr.cfg.progress_every,
                     "progress line period in iterations");
  tr_cmd->add_option("--checkpoint-every", tr.cfg.checkpoint_every,
                     "periodic checkpoint period (0 = final only)");
  tr_cmd->add_option("--style-views", tr.style_views,
                     "views when --style is an image");
  tr_cmd->add_option("--style-max-edge", tr.style_max_edge,
                     "voxel-plane long edge when --style is an image");
  tr_cmd->add_option("--style-fov", tr.style_fov,
                     "fov when --style is an image");
  tr_cmd->add_option("--style-radius", tr.style_radius,
                     "orbit radius when --style is an image");
  tr.model.add_flags(tr_cmd);
  tr_cmd->callback([&] { run_train(tr); });

  RenderOpts rd;
  auto* rd_cmd = app.add_subcommand(
      "render", "render one branch of a trained checkpoint");
  rd_cmd->fallthrough();
  rd.io.add_flags(rd_cmd, false);
  rd_cmd->add_option("--branch", rd.branch, "which branch to render")
      ->check(CLI::IsMember({"content", "style"}));
  rd_cmd->callback([&] { run_render(rd); });

  StylizeOpts st;
  auto* st_cmd = app.add_subcommand(
      "stylize", "render with feature statistics renormalized across scenes");
  st_cmd->fallthrough();
  st.io.add_flags(st_cmd, false);
  st_cmd->add_option("--alpha", st.alpha,
                     "blend weight, 0 = original, 1 = fully restyled");
  st_cmd->add_option("--direction", st.direction, "transfer direction")
      ->check(CLI::IsMember({"content-to-style", "style-to-content"}));
  st_cmd->add_option("--voxel-res", st.voxel_res,
                     "moment sampling lattice resolution");
  auto* mask_opt = st_cmd->add_option(
      "--density-mask", st.density_mask,
      "keep only voxels whose density exceeds this when computing moments");
  st_cmd->add_option("--moments", st.moments,
                     "precomputed moments file (skips extraction)");
  st_cmd->callback([&] {
    st.has_density_mask = mask_opt->count() > 0;
    run_stylize(st);
  });

  ExtractFeaturesOpts ex;
  auto* ex_cmd = app.add_subcommand(
      "extract-features",
      "sample voxel-grid feature moments from a checkpoint");
  ex_cmd->fallthrough();
  ex_cmd->add_option("--checkpoint", ex.checkpoint, "model checkpoint file")
      ->required();
  ex_cmd->add_option("--out", ex.out, "output directory")->required();
  ex_cmd->add_option("--voxel-res", ex.voxel_res,
                     "moment sampling lattice resolution");
  auto* ex_mask_opt = ex_cmd->add_option(
      "--density-mask", ex.density_mask,
      "keep only voxels whose density exceeds this");
  ex_cmd->add_option("--threads", ex.threads, "worker threads (0 = auto)");
  ex_cmd->callback([&] {
    ex.has_density_mask = ex_mask_opt->count() > 0;
    run_extract_features(ex);
  });

  EvalConsistencyOpts ev;
  auto* ev_cmd = app.add_subcommand(
      "eval-consistency",
      "score multi-view consistency of a rendered sequence");
  ev_cmd->fallthrough();
  ev_cmd->add_option("--renders", ev.renders,
                     "render sequence directory (from render or stylize)")
      ->required();
  ev_cmd->add_option("--gaps", ev.gaps, "frame index gaps to score")
      ->delimiter(',');
  ev_cmd->add_option("--tolerance", ev.tolerance,
                     "depth agreement tolerance in scene units");
  ev_cmd->add_option("--opacity-threshold", ev.opacity_threshold,
                     "minimum source-pixel opacity");
  ev_cmd->add_option("--threads", ev.threads, "worker threads (0 = auto)");
  ev_cmd->add_option("--out", ev.out, "report output directory");
  ev_cmd->callback([&] { run_eval_consistency(ev); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace voxelstyle

#endif  // VOXELSTYLE_CLI_HPP_
