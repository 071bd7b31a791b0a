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

#ifndef VOXELSTYLE_TRAINER_HPP_
#define VOXELSTYLE_TRAINER_HPP_

#include <chrono>
#include <functional>
#include <ostream>
#include <vector>

#include "voxelstyle/adam.hpp"
#include "voxelstyle/dataset.hpp"
#include "voxelstyle/volume_render.hpp"

namespace voxelstyle {

struct TrainConfig {
  int iterations = 20000;
  int rays_per_batch_per_scene = 4096;
  int n_samples = 128;
  double lr_hash = 1e-2;
  double lr_mlp = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double adam_eps = 1e-15;
  double huber_delta = 0.1;
  uint64_t seed = 1;
  int threads = 0;          // 0: VOXELSTYLE_THREADS or hardware
  int progress_every = 100;
  int checkpoint_every = 0;  // 0 disables periodic checkpoints

  void validate() const {
    require(iterations >= 1, "train: iterations must be >= 1");
    require(rays_per_batch_per_scene >= 1, "train: batch size must be >= 1");
    require(n_samples >= 1, "train: n_samples must be >= 1");
    require(lr_hash > 0 && lr_mlp > 0, "train: learning rates must be > 0");
    require(beta1 > 0 && beta1 < 1 && beta2 > 0 && beta2 < 1,
            "train: betas must lie in (0,1)");
    require(adam_eps > 0, "train: adam_eps must be > 0");
    require(huber_delta > 0, "train: huber_delta must be > 0");
  }
};

// One training ray: geometry in double, target color in the model scalar.
template <typename T>
struct RaySample {
  Vec3<double> origin;
  Vec3<double> direction;
  double t_near = 0.0;
  double t_far = 0.0;
  Vec3<T> target;
};

template <typename T>
using RayBatch = std::vector<RaySample<T>>;

// Gradients for every trainable tensor in the model.
template <typename T>
struct ModelGrads {
  std::array<HashGridGrads<T>, kBranchCount> grid;
  std::array<MlpGrads<T>, kBranchCount> density;
  MlpGrads<T> color;

  static ModelGrads zeros(const RadianceModel<T>& m) {
    ModelGrads g;
    for (int b = 0; b < kBranchCount; ++b) {
      g.grid[b] = HashGridGrads<T>::zeros(m.branches[b].grid_spec);
      g.density[b] = MlpGrads<T>::zeros(m.branches[b].density_mlp.spec);
    }
    g.color = MlpGrads<T>::zeros(m.color_mlp.spec);
    return g;
  }

  void set_zero() {
    for (auto& t : grid) t.set_zero();
    for (auto& t : density) t.set_zero();
    color.set_zero();
  }
};

// Adam accumulators for every trainable tensor.
template <typename T>
struct ModelAdamState {
  std::array<std::vector<AdamState<T>>, kBranchCount> grid;  // per level
  std::array<std::vector<AdamState<T>>, kBranchCount> density_w, density_b;
  std::vector<AdamState<T>> color_w, color_b;

  static ModelAdamState zeros(const RadianceModel<T>& m) {
    ModelAdamState s;
    for (int b = 0; b < kBranchCount; ++b) {
      for (const auto& t : m.branches[b].grid.tables) {
        s.grid[b].push_back(AdamState<T>::zeros(t.size()));
      }
      for (const auto& w : m.branches[b].density_mlp.weights) {
        s.density_w[b].push_back(AdamState<T>::zeros(w.size()));
      }
      for (const auto& bb : m.branches[b].density_mlp.biases) {
        s.density_b[b].push_back(AdamState<T>::zeros(bb.size()));
      }
    }
    for (const auto& w : m.color_mlp.weights) {
      s.color_w.push_back(AdamState<T>::zeros(w.size()));
    }
    for (const auto& bb : m.color_mlp.biases) {
      s.color_b.push_back(AdamState<T>::zeros(bb.size()));
    }
    return s;
  }
};

namespace detail {

inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  uint64_t x = a + 0x9E3779B97F4A7C15ull * (b + 0x632BE59BD9B4E019ull);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

// Per-worker gradient buffers for one scene pass.
template <typename T>
struct SceneGradBuf {
  HashGridGrads<T> grid;
  MlpGrads<T> density;
  MlpGrads<T> color;
  double loss = 0.0;

  void init(const RadianceModel<T>& m, int branch) {
    grid = HashGridGrads<T>::zeros(m.branches[branch].grid_spec);
    density = MlpGrads<T>::zeros(m.branches[branch].density_mlp.spec);
    color = MlpGrads<T>::zeros(m.color_mlp.spec);
    loss = 0.0;
  }
};

// Forward and backward over one scene's ray batch. Gradients are averaged
// over the batch and accumulated into the branch's slot of `grads` (color
// gradients sum with whatever another scene pass already contributed).
// Returns the mean Huber loss.
template <typename T>
double scene_pass(const RadianceModel<T>& model, const ModelWorkspace<T>& ws,
                  int branch, const RayBatch<T>& batch,
                  const TrainConfig& cfg, uint64_t iter,
                  const Vec3<double>& background, ModelGrads<T>& grads,
                  std::vector<SceneGradBuf<T>>& worker_bufs) {
  if (batch.empty()) return 0.0;
  const int threads =
      std::min<int>(resolve_thread_count(cfg.threads),
                    static_cast<int>(batch.size()));
  const bool direct = threads == 1;
  if (!direct) {
    worker_bufs.resize(threads);
    for (auto& buf : worker_bufs) buf.init(model, branch);
  } else {
    worker_bufs.resize(1);
    worker_bufs[0].loss = 0.0;
  }

  const auto& br = model.branches[branch];
  const int feat_dim = br.grid_spec.feature_dim();
  const int geom_dim = model.spec.geom_dim;
  const int S = cfg.n_samples;
  const T inv_batch = T(1) / static_cast<T>(batch.size());
  const Vec3<T> bg(static_cast<T>(background.x()),
                   static_cast<T>(background.y()),
                   static_cast<T>(background.z()));

  parallel_for_chunks(threads, batch.size(), [&](int worker, size_t begin,
                                                 size_t end) {
    HashGridGrads<T>& g_grid = direct ? grads.grid[branch]
                                      : worker_bufs[worker].grid;
    MlpGrads<T>& g_density = direct ? grads.density[branch]
                                    : worker_bufs[worker].density;
    MlpGrads<T>& g_color = direct ? grads.color : worker_bufs[worker].color;
    double loss_acc = 0.0;

    std::vector<T> feat(feat_dim);
    std::vector<T> geoms(static_cast<size_t>(S) * geom_dim);
    std::vector<T> rgbs(static_cast<size_t>(S) * 3);
    std::vector<T> weights(S), trans_next(S), deltas(S), ts_T(S);
    std::vector<MlpCache<T>> density_caches(S), color_caches(S);
    std::vector<T> dgeom(geom_dim), dcolor_in(geom_dim + kShCoeffCount);
    std::vector<T> dfeat(feat_dim);
    T rgb_buf[3];

    for (size_t r = begin; r < end; ++r) {
      const RaySample<T>& ray = batch[r];
      Rng ray_rng(mix_seed(mix_seed(cfg.seed, iter),
                           (static_cast<uint64_t>(branch) << 32) | r));
      Ray geom_ray;
      geom_ray.origin = ray.origin;
      geom_ray.direction = ray.direction;
      geom_ray.t_near = ray.t_near;
      geom_ray.t_far = ray.t_far;
      const std::vector<double> ts =
          sample_points(geom_ray, S, ray_rng, false);
      const auto dir_enc =
          sh_encode(Vec3<T>(static_cast<T>(ray.direction.x()),
                            static_cast<T>(ray.direction.y()),
                            static_cast<T>(ray.direction.z())));

      // Forward march. Once transmittance underflows to exactly zero the
      // remaining samples cannot move any output or gradient, so stop.
      Vec3<T> pred(T(0), T(0), T(0));
      T trans = T(1);
      int n_eval = 0;
      for (int i = 0; i < S; ++i) {
        ts_T[i] = static_cast<T>(ts[i]);
        const T t_next = static_cast<T>(i + 1 < S ? ts[i + 1] : ray.t_far);
        deltas[i] = t_next - ts_T[i];
        T pos[3] = {
            static_cast<T>(ray.origin.x() + ts[i] * ray.direction.x()),
            static_cast<T>(ray.origin.y() + ts[i] * ray.direction.y()),
            static_cast<T>(ray.origin.z() + ts[i] * ray.direction.z())};
        T* geom = geoms.data() + static_cast<size_t>(i) * geom_dim;
        position_forward_ws(model, ws, branch, pos, feat.data(), geom,
                            &density_caches[i]);
        const T sigma = density_from_geom(geom[0]);
        const T alpha = T(1) - std::exp(-sigma * deltas[i]);
        const T w = trans * alpha;
        weights[i] = w;
        T* rgb = rgbs.data() + static_cast<size_t>(i) * 3;
        if (w != T(0)) {
          color_forward_ws(model, ws, geom, dir_enc.data(), rgb_buf,
                           &color_caches[i]);
          rgb[0] = rgb_buf[0];
          rgb[1] = rgb_buf[1];
          rgb[2] = rgb_buf[2];
          pred += w * Vec3<T>(rgb[0], rgb[1], rgb[2]);
        } else {
          rgb[0] = rgb[1] = rgb[2] = T(0);
        }
        trans *= T(1) - alpha;
        trans_next[i] = trans;
        n_eval = i + 1;
        if (trans == T(0)) break;
      }
      pred += trans * bg;

      loss_acc += static_cast<double>(
          huber_loss(pred, ray.target, static_cast<T>(cfg.huber_delta)));
      const Vec3<T> d_pred =
          huber_grad(pred, ray.target, static_cast<T>(cfg.huber_delta)) *
          inv_batch;

      // Reverse sweep: suffix sums carry the density chain, colors feed the
      // shared head, features scatter back into the hash tables.
      T suffix = d_pred.dot(bg) * trans;
      for (int i = n_eval - 1; i >= 0; --i) {
        const T* rgb = rgbs.data() + static_cast<size_t>(i) * 3;
        const T* geom = geoms.data() + static_cast<size_t>(i) * geom_dim;
        const T g_w = d_pred.x() * rgb[0] + d_pred.y() * rgb[1] +
                      d_pred.z() * rgb[2];
        const T d_sigma = deltas[i] * (g_w * trans_next[i] - suffix);
        suffix += g_w * weights[i];

        std::fill(dgeom.begin(), dgeom.end(), T(0));
        if (weights[i] != T(0)) {
          const T drgb[3] = {d_pred.x() * weights[i],
                             d_pred.y() * weights[i],
                             d_pred.z() * weights[i]};
          mlp_backward_sample(model.color_mlp.spec, model.color_mlp,
                              color_caches[i], drgb, g_color,
                              dcolor_in.data());
          for (int k = 0; k < geom_dim; ++k) dgeom[k] = dcolor_in[k];
        }
        const T g0 = geom[0];
        if (g0 > T(-15) && g0 < T(15)) {
          dgeom[0] += d_sigma * std::exp(g0);
        }
        const auto& br2 = model.branches[branch];
        mlp_backward_sample(br2.density_mlp.spec, br2.density_mlp,
                            density_caches[i], dgeom.data(), g_density,
                            dfeat.data());
        T pos[3] = {
            static_cast<T>(ray.origin.x() + ts[i] * ray.direction.x()),
            static_cast<T>(ray.origin.y() + ts[i] * ray.direction.y()),
            static_cast<T>(ray.origin.z() + ts[i] * ray.direction.z())};
        hash_encode_backward_sample(
            ws.layouts[branch], br2.grid_spec.features_per_level, pos,
            dfeat.data(),
            [&](int level, uint32_t row, int channel, T value) {
              g_grid.tables[level][static_cast<size_t>(row) *
                                       br2.grid_spec.features_per_level +
                                   channel] += value;
            });
      }
    }
    if (direct) {
      worker_bufs[0].loss += loss_acc;
    } else {
      worker_bufs[worker].loss = loss_acc;
    }
  });

  double total_loss = 0.0;
  if (direct) {
    total_loss = worker_bufs[0].loss;
  } else {
    for (const auto& buf : worker_bufs) {  // fixed worker order
      grads.grid[branch].add(buf.grid);
      grads.density[branch].add(buf.density);
      grads.color.add(buf.color);
      total_loss += buf.loss;
    }
  }
  return total_loss / static_cast<double>(batch.size());
}

template <typename T>
void apply_adam(RadianceModel<T>& model, const ModelGrads<T>& grads,
                ModelAdamState<T>& opt, const TrainConfig& cfg,
                bool content_active, bool style_active) {
  const bool active[kBranchCount] = {content_active, style_active};
  for (int b = 0; b < kBranchCount; ++b) {
    if (!active[b]) continue;  // idle branches keep parameters AND momentum
    auto& br = model.branches[b];
    for (size_t l = 0; l < br.grid.tables.size(); ++l) {
      adam_step(br.grid.tables[l].data(), grads.grid[b].tables[l].data(),
                br.grid.tables[l].size(), opt.grid[b][l], cfg.lr_hash,
                cfg.beta1, cfg.beta2, cfg.adam_eps);
    }
    for (size_t l = 0; l < br.density_mlp.weights.size(); ++l) {
      adam_step(br.density_mlp.weights[l].data(),
                grads.density[b].dweights[l].data(),
                br.density_mlp.weights[l].size(), opt.density_w[b][l],
                cfg.lr_mlp, cfg.beta1, cfg.beta2, cfg.adam_eps);
      adam_step(br.density_mlp.biases[l].data(),
                grads.density[b].dbiases[l].data(),
                br.density_mlp.biases[l].size(), opt.density_b[b][l],
                cfg.lr_mlp, cfg.beta1, cfg.beta2, cfg.adam_eps);
    }
  }
  if (content_active || style_active) {
    for (size_t l = 0; l < model.color_mlp.weights.size(); ++l) {
      adam_step(model.color_mlp.weights[l].data(),
                grads.color.dweights[l].data(),
                model.color_mlp.weights[l].size(), opt.color_w[l],
                cfg.lr_mlp, cfg.beta1, cfg.beta2, cfg.adam_eps);
      adam_step(model.color_mlp.biases[l].data(),
                grads.color.dbiases[l].data(), model.color_mlp.biases[l].size(),
                opt.color_b[l], cfg.lr_mlp, cfg.beta1, cfg.beta2,
                cfg.adam_eps);
    }
  }
}

}  // namespace detail

// Uniform random rays over all pixels of all views; rays that miss the
// scene box are redrawn so every batch entry carries a valid interval.
template <typename T>
RayBatch<T> build_ray_batch(const ViewDataset& ds, int count, Rng& rng) {
  require(count >= 1, "build_ray_batch: count must be >= 1");
  ds.validate();
  RayBatch<T> batch;
  batch.reserve(count);
  const uint64_t max_attempts = static_cast<uint64_t>(count) * 1000 + 1000;
  uint64_t attempts = 0;
  while (batch.size() < static_cast<size_t>(count)) {
    require(++attempts <= max_attempts,
            "build_ray_batch: rays keep missing the scene bounds");
    const auto& view = ds.views[rng.below(ds.views.size())];
    const int px = static_cast<int>(rng.below(view.camera.width));
    const int py = static_cast<int>(rng.below(view.camera.height));
    auto ray = generate_clipped_ray(view.camera, px, py, ds.bounds);
    if (!ray) continue;
    RaySample<T> s;
    s.origin = ray->origin;
    s.direction = ray->direction;
    s.t_near = ray->t_near;
    s.t_far = ray->t_far;
    s.target = Vec3<T>(static_cast<T>(view.rgb.at(py, px, 0)),
                       static_cast<T>(view.rgb.at(py, px, 1)),
                       static_cast<T>(view.rgb.at(py, px, 2)));
    batch.push_back(s);
  }
  return batch;
}

// One joint optimization step: content rays through the content branch,
// style rays through the style branch, shared color MLP fed by the sum of
// both scenes' gradients. A branch whose batch is empty this step is left
// completely untouched (no parameter drift from stale momentum).
template <typename T>
std::pair<double, double> train_step(
    RadianceModel<T>& model, const RayBatch<T>& content_batch,
    const RayBatch<T>& style_batch, ModelAdamState<T>& opt,
    const TrainConfig& cfg, uint64_t iter = 0,
    const Vec3<double>& content_background = Vec3<double>(1, 1, 1),
    const Vec3<double>& style_background = Vec3<double>(1, 1, 1)) {
  cfg.validate();
  require(!content_batch.empty() || !style_batch.empty(),
          "train_step: both batches are empty");
  detail::ModelWorkspace<T> ws(model);
  ModelGrads<T> grads = ModelGrads<T>::zeros(model);
  std::vector<detail::SceneGradBuf<T>> bufs;
  const double loss_c =
      detail::scene_pass(model, ws, 0, content_batch, cfg, iter,
                         content_background, grads, bufs);
  const double loss_s =
      detail::scene_pass(model, ws, 1, style_batch, cfg, iter,
                         style_background, grads, bufs);
  detail::apply_adam(model, grads, opt, cfg, !content_batch.empty(),
                     !style_batch.empty());
  return {loss_c, loss_s};
}

template <typename T>
struct TrainResult {
  std::vector<double> loss_content;
  std::vector<double> loss_style;
};

// Joint training over both scenes: every iteration draws a fresh ray batch
// from each dataset and applies one step. Progress lines are
// "iter, loss_content, loss_style, elapsed_s".
template <typename T>
TrainResult<T> train(
    RadianceModel<T>& model, const ViewDataset& content,
    const ViewDataset& style, const TrainConfig& cfg,
    std::ostream* progress = nullptr,
    const std::function<void(int, const RadianceModel<T>&)>& on_checkpoint =
        {}) {
  cfg.validate();
  content.validate();
  style.validate();
  ModelAdamState<T> opt = ModelAdamState<T>::zeros(model);
  TrainResult<T> result;
  result.loss_content.reserve(cfg.iterations);
  result.loss_style.reserve(cfg.iterations);
  Rng content_rng(detail::mix_seed(cfg.seed, 0xC0117E17ull));
  Rng style_rng(detail::mix_seed(cfg.seed, 0x57D1E401ull));
  ModelGrads<T> grads = ModelGrads<T>::zeros(model);
  std::vector<detail::SceneGradBuf<T>> bufs;
  const auto t0 = std::chrono::steady_clock::now();

  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    RayBatch<T> cb = build_ray_batch<T>(content, cfg.rays_per_batch_per_scene,
                                        content_rng);
    RayBatch<T> sb = build_ray_batch<T>(style, cfg.rays_per_batch_per_scene,
                                        style_rng);
    detail::ModelWorkspace<T> ws(model);
    grads.set_zero();
    const double loss_c = detail::scene_pass(
        model, ws, 0, cb, cfg, static_cast<uint64_t>(iter),
        content.background, grads, bufs);
    const double loss_s = detail::scene_pass(
        model, ws, 1, sb, cfg, static_cast<uint64_t>(iter), style.background,
        grads, bufs);
    require(std::isfinite(loss_c) && std::isfinite(loss_s),
            "train: loss diverged to a non-finite value");
    detail::apply_adam(model, grads, opt, cfg, true, true);
    result.loss_content.push_back(loss_c);
    result.loss_style.push_back(loss_s);

    if (progress && (iter == 1 || iter == cfg.iterations ||
                     (cfg.progress_every > 0 &&
                      iter % cfg.progress_every == 0))) {
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      (*progress) << iter << ", " << loss_c << ", " << loss_s << ", "
                  << elapsed << "\n";
      progress->flush();
    }
    if (on_checkpoint && cfg.checkpoint_every > 0 &&
        (iter % cfg.checkpoint_every == 0 || iter == cfg.iterations)) {
      on_checkpoint(iter, model);
    }
  }
  return result;
}

}  // namespace voxelstyle

#endif  // VOXELSTYLE_TRAINER_HPP_
