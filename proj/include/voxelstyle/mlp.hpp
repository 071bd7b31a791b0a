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

#ifndef VOXELSTYLE_MLP_HPP_
#define VOXELSTYLE_MLP_HPP_

#include <string>
#include <vector>

#include "voxelstyle/common.hpp"

namespace voxelstyle {

enum class Activation { kNone, kRelu, kSigmoid };

inline std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kNone: return "none";
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
  }
  throw std::invalid_argument("unknown activation");
}

inline Activation activation_from_name(const std::string& name) {
  if (name == "none") return Activation::kNone;
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw std::invalid_argument("unknown activation name: " + name);
}

struct MlpLayerSpec {
  int in = 0;
  int out = 0;
  Activation act = Activation::kNone;
};

struct MlpSpec {
  std::vector<MlpLayerSpec> layers;

  void validate() const {
    require(!layers.empty(), "mlp: at least one layer required");
    for (size_t i = 0; i < layers.size(); ++i) {
      require(layers[i].in >= 1 && layers[i].out >= 1,
              "mlp: layer dimensions must be positive");
      if (i > 0) {
        require(layers[i].in == layers[i - 1].out,
                "mlp: layer dimensions do not chain");
      }
    }
  }

  int input_dim() const { return layers.front().in; }
  int output_dim() const { return layers.back().out; }
};

// Weights are row-major out x in; one weight matrix and bias vector per
// layer.
template <typename T>
struct MlpParams {
  MlpSpec spec;
  std::vector<std::vector<T>> weights;
  std::vector<std::vector<T>> biases;

  static MlpParams zeros(const MlpSpec& spec) {
    spec.validate();
    MlpParams p;
    p.spec = spec;
    for (const auto& l : spec.layers) {
      p.weights.emplace_back(static_cast<size_t>(l.out) * l.in, T(0));
      p.biases.emplace_back(l.out, T(0));
    }
    return p;
  }

  // Glorot-uniform weights, zero biases.
  static MlpParams init(const MlpSpec& spec, Rng& rng) {
    MlpParams p = zeros(spec);
    for (size_t l = 0; l < spec.layers.size(); ++l) {
      const double bound = std::sqrt(
          6.0 / (spec.layers[l].in + spec.layers[l].out));
      for (T& w : p.weights[l]) {
        w = static_cast<T>(rng.uniform(-bound, bound));
      }
    }
    return p;
  }

  size_t layer_count() const { return spec.layers.size(); }
};

// Gradients in the same layout as the parameters.
template <typename T>
struct MlpGrads {
  std::vector<std::vector<T>> dweights;
  std::vector<std::vector<T>> dbiases;

  static MlpGrads zeros(const MlpSpec& spec) {
    MlpGrads g;
    for (const auto& l : spec.layers) {
      g.dweights.emplace_back(static_cast<size_t>(l.out) * l.in, T(0));
      g.dbiases.emplace_back(l.out, T(0));
    }
    return g;
  }

  void set_zero() {
    for (auto& w : dweights) std::fill(w.begin(), w.end(), T(0));
    for (auto& b : dbiases) std::fill(b.begin(), b.end(), T(0));
  }

  void add(const MlpGrads& other) {
    for (size_t l = 0; l < dweights.size(); ++l) {
      for (size_t i = 0; i < dweights[l].size(); ++i) {
        dweights[l][i] += other.dweights[l][i];
      }
      for (size_t i = 0; i < dbiases[l].size(); ++i) {
        dbiases[l][i] += other.dbiases[l][i];
      }
    }
  }
};

// Post-activation values per layer (index 0 is the input), plus
// pre-activation values needed to gate the activation derivatives.
template <typename T>
struct MlpCache {
  std::vector<std::vector<T>> post;  // layer_count + 1 entries
  std::vector<std::vector<T>> pre;   // layer_count entries
};

namespace detail {

// Weight matrices transposed to in x out so the inner loop runs contiguously
// over outputs. Samples are always pushed through one at a time with a fixed
// reduction order (k outer), which keeps results bit-identical no matter how
// calls are batched or threaded.
template <typename T>
struct MlpScratch {
  std::vector<std::vector<T>> wt;  // [layer][in * out]

  explicit MlpScratch(const MlpParams<T>& params) {
    wt.resize(params.layer_count());
    for (size_t l = 0; l < params.layer_count(); ++l) {
      const int in = params.spec.layers[l].in;
      const int out = params.spec.layers[l].out;
      wt[l].resize(static_cast<size_t>(in) * out);
      for (int o = 0; o < out; ++o) {
        for (int i = 0; i < in; ++i) {
          wt[l][static_cast<size_t>(i) * out + o] =
              params.weights[l][static_cast<size_t>(o) * in + i];
        }
      }
    }
  }
};

template <typename T>
VOXELSTYLE_NOINLINE void affine_forward_sample(const T* wt, const T* bias,
                                               int in, int out, const T* x,
                                               T* y) {
  for (int o = 0; o < out; ++o) y[o] = bias[o];
  for (int k = 0; k < in; ++k) {
    const T xk = x[k];
    const T* wrow = wt + static_cast<size_t>(k) * out;
    for (int o = 0; o < out; ++o) y[o] += wrow[o] * xk;
  }
}

template <typename T>
inline T sigmoid(T z) {
  return T(1) / (T(1) + std::exp(-z));
}

template <typename T>
inline void apply_activation(Activation act, const T* z, T* a, int n) {
  switch (act) {
    case Activation::kNone:
      for (int i = 0; i < n; ++i) a[i] = z[i];
      break;
    case Activation::kRelu:
      for (int i = 0; i < n; ++i) a[i] = z[i] > T(0) ? z[i] : T(0);
      break;
    case Activation::kSigmoid:
      for (int i = 0; i < n; ++i) a[i] = sigmoid(z[i]);
      break;
  }
}

// d(activation)/dz expressed through the cached pre/post values.
template <typename T>
inline void activation_backward(Activation act, const T* z, const T* a,
                                const T* upstream, T* dz, int n) {
  switch (act) {
    case Activation::kNone:
      for (int i = 0; i < n; ++i) dz[i] = upstream[i];
      break;
    case Activation::kRelu:
      for (int i = 0; i < n; ++i) dz[i] = z[i] > T(0) ? upstream[i] : T(0);
      break;
    case Activation::kSigmoid:
      for (int i = 0; i < n; ++i) dz[i] = upstream[i] * a[i] * (T(1) - a[i]);
      break;
  }
}

// Forward through all layers for one sample. The cache pointer may be null
// when only the output is needed.
template <typename T>
inline void mlp_forward_sample(const MlpSpec& spec, const MlpScratch<T>& ws,
                               const MlpParams<T>& params, const T* x,
                               T* out, MlpCache<T>* cache) {
  const size_t L = spec.layers.size();
  thread_local std::vector<T> buf_a, buf_b;
  if (cache) {
    cache->post.resize(L + 1);  // keep capacity across reuse
    cache->pre.resize(L);
    cache->post[0].assign(x, x + spec.input_dim());
  }
  buf_a.assign(x, x + spec.input_dim());
  for (size_t l = 0; l < L; ++l) {
    const auto& layer = spec.layers[l];
    buf_b.resize(layer.out);
    affine_forward_sample(ws.wt[l].data(), params.biases[l].data(),
                          layer.in, layer.out, buf_a.data(), buf_b.data());
    if (cache) cache->pre[l].assign(buf_b.begin(), buf_b.end());
    buf_a.resize(layer.out);
    apply_activation(layer.act, buf_b.data(), buf_a.data(), layer.out);
    if (cache) cache->post[l + 1].assign(buf_a.begin(), buf_a.end());
  }
  std::copy(buf_a.begin(), buf_a.end(), out);
}

// Reverse pass for one sample; accumulates parameter gradients into grads
// and writes the gradient w.r.t. the input into dx (may be null).
template <typename T>
VOXELSTYLE_NOINLINE void mlp_backward_sample(const MlpSpec& spec,
                                             const MlpParams<T>& params,
                                             const MlpCache<T>& cache,
                                             const T* upstream,
                                             MlpGrads<T>& grads, T* dx) {
  const size_t L = spec.layers.size();
  thread_local std::vector<T> dz, da;
  da.assign(upstream, upstream + spec.output_dim());
  for (size_t li = L; li-- > 0;) {
    const auto& layer = spec.layers[li];
    dz.resize(layer.out);
    activation_backward(layer.act, cache.pre[li].data(),
                        cache.post[li + 1].data(), da.data(), dz.data(),
                        layer.out);
    const T* input = cache.post[li].data();
    T* dw = grads.dweights[li].data();
    T* db = grads.dbiases[li].data();
    for (int o = 0; o < layer.out; ++o) {
      const T g = dz[o];
      db[o] += g;
      T* dwrow = dw + static_cast<size_t>(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) dwrow[i] += g * input[i];
    }
    if (li == 0 && dx == nullptr) break;
    std::vector<T>& dprev = da;
    dprev.assign(layer.in, T(0));
    const T* w = params.weights[li].data();
    for (int o = 0; o < layer.out; ++o) {
      const T g = dz[o];
      const T* wrow = w + static_cast<size_t>(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) dprev[i] += wrow[i] * g;
    }
    if (li == 0) {
      std::copy(dprev.begin(), dprev.end(), dx);
    }
  }
}

}  // namespace detail

template <typename T>
void check_input_width(const MlpParams<T>& params,
                       const std::vector<T>& input) {
  require(static_cast<int>(input.size()) == params.spec.input_dim(),
          "mlp_forward: input width mismatch");
}

// Affine map plus activation per layer; returns the output along with the
// cached activations the backward pass needs.
template <typename T>
std::pair<std::vector<T>, MlpCache<T>> mlp_forward(const MlpParams<T>& params,
                                                   const std::vector<T>& input) {
  check_input_width(params, input);
  detail::MlpScratch<T> ws(params);
  std::vector<T> out(params.spec.output_dim());
  MlpCache<T> cache;
  detail::mlp_forward_sample(params.spec, ws, params, input.data(),
                             out.data(), &cache);
  return {std::move(out), std::move(cache)};
}

// Exact reverse-mode gradients for one forward call. The cache must come
// from a forward pass of the same parameter shape.
template <typename T>
std::pair<MlpGrads<T>, std::vector<T>> mlp_backward(
    const MlpParams<T>& params, const MlpCache<T>& cache,
    const std::vector<T>& upstream) {
  require(cache.post.size() == params.layer_count() + 1 &&
              cache.pre.size() == params.layer_count(),
          "mlp_backward: cache does not match parameters");
  for (size_t l = 0; l < params.layer_count(); ++l) {
    require(static_cast<int>(cache.pre[l].size()) ==
                params.spec.layers[l].out,
            "mlp_backward: cache does not match parameters");
  }
  require(static_cast<int>(upstream.size()) == params.spec.output_dim(),
          "mlp_backward: upstream width mismatch");
  MlpGrads<T> grads = MlpGrads<T>::zeros(params.spec);
  std::vector<T> dx(params.spec.input_dim());
  detail::mlp_backward_sample(params.spec, params, cache, upstream.data(),
                              grads, dx.data());
  return {std::move(grads), std::move(dx)};
}

}  // namespace voxelstyle

#endif  // VOXELSTYLE_MLP_HPP_
