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

#include "voxelstyle/mlp.hpp"

#include <cmath>

#include "gtest/gtest.h"

namespace voxelstyle {
namespace {

// Independent scalar reimplementation: plain nested loops over the row-major
// weights, no shared helpers with the code under test.
std::vector<double> ReferenceForward(const MlpParams<double>& p,
                                     std::vector<double> x) {
  for (size_t l = 0; l < p.spec.layers.size(); ++l) {
    const auto& layer = p.spec.layers[l];
    std::vector<double> y(layer.out);
    for (int o = 0; o < layer.out; ++o) {
      double acc = p.biases[l][o];
      for (int i = 0; i < layer.in; ++i) {
        acc += p.weights[l][static_cast<size_t>(o) * layer.in + i] * x[i];
      }
      switch (layer.act) {
        case Activation::kNone: y[o] = acc; break;
        case Activation::kRelu: y[o] = acc > 0 ? acc : 0; break;
        case Activation::kSigmoid: y[o] = 1.0 / (1.0 + std::exp(-acc)); break;
      }
    }
    x = std::move(y);
  }
  return x;
}

MlpSpec SmallSpec() {
  MlpSpec spec;
  spec.layers.push_back({5, 7, Activation::kRelu});
  spec.layers.push_back({7, 4, Activation::kRelu});
  spec.layers.push_back({4, 3, Activation::kSigmoid});
  return spec;
}

TEST(MlpTest, SpecValidation) {
  MlpSpec spec = SmallSpec();
  spec.validate();
  spec.layers[1].in = 6;  // breaks the chain
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  MlpSpec empty;
  EXPECT_THROW(empty.validate(), std::invalid_argument);
}

TEST(MlpTest, ZeroWeightsYieldActivatedBias) {
  MlpSpec spec;
  spec.layers.push_back({3, 2, Activation::kSigmoid});
  auto p = MlpParams<double>::zeros(spec);
  p.biases[0] = {1.0, -2.0};
  auto [out, cache] = mlp_forward(p, {0.4, -0.2, 0.9});
  EXPECT_DOUBLE_EQ(out[0], 1.0 / (1.0 + std::exp(-1.0)));
  EXPECT_DOUBLE_EQ(out[1], 1.0 / (1.0 + std::exp(2.0)));
}

TEST(MlpTest, ReluIdentityLayer) {
  MlpSpec spec;
  spec.layers.push_back({2, 2, Activation::kRelu});
  auto p = MlpParams<double>::zeros(spec);
  p.weights[0] = {1.0, 0.0, 0.0, 1.0};
  auto [out, cache] = mlp_forward(p, {-1.0, 2.0});
  EXPECT_EQ(out[0], 0.0);
  EXPECT_EQ(out[1], 2.0);
}

TEST(MlpTest, ForwardMatchesScalarOracle) {
  Rng rng(31);
  auto p = MlpParams<double>::init(SmallSpec(), rng);
  for (auto& b : p.biases) {
    for (auto& v : b) v = rng.uniform(-0.5, 0.5);
  }
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(5);
    for (auto& v : x) v = rng.uniform(-2.0, 2.0);
    auto [out, cache] = mlp_forward(p, x);
    auto ref = ReferenceForward(p, x);
    ASSERT_EQ(out.size(), ref.size());
    for (size_t i = 0; i < out.size(); ++i) {
      EXPECT_NEAR(out[i], ref[i], 1e-6);
    }
  }
}

TEST(MlpTest, InputWidthMismatchThrows) {
  Rng rng(1);
  auto p = MlpParams<double>::init(SmallSpec(), rng);
  EXPECT_THROW(mlp_forward(p, std::vector<double>(4, 0.0)),
               std::invalid_argument);
}

TEST(MlpTest, ZeroUpstreamGivesZeroGradients) {
  Rng rng(5);
  auto p = MlpParams<double>::init(SmallSpec(), rng);
  auto [out, cache] = mlp_forward(p, {0.1, 0.2, 0.3, 0.4, 0.5});
  auto [grads, dx] = mlp_backward(p, cache, {0.0, 0.0, 0.0});
  for (const auto& w : grads.dweights) {
    for (double v : w) EXPECT_EQ(v, 0.0);
  }
  for (const auto& b : grads.dbiases) {
    for (double v : b) EXPECT_EQ(v, 0.0);
  }
  for (double v : dx) EXPECT_EQ(v, 0.0);
}

TEST(MlpTest, SingleLinearLayerWeightGradientIsOuterProduct) {
  MlpSpec spec;
  spec.layers.push_back({3, 2, Activation::kNone});
  Rng rng(9);
  auto p = MlpParams<double>::init(spec, rng);
  std::vector<double> x = {0.5, -1.5, 2.0};
  std::vector<double> up = {3.0, -4.0};
  auto [out, cache] = mlp_forward(p, x);
  auto [grads, dx] = mlp_backward(p, cache, up);
  for (int o = 0; o < 2; ++o) {
    EXPECT_DOUBLE_EQ(grads.dbiases[0][o], up[o]);
    for (int i = 0; i < 3; ++i) {
      EXPECT_DOUBLE_EQ(grads.dweights[0][o * 3 + i], up[o] * x[i]);
    }
  }
  for (int i = 0; i < 3; ++i) {
    double want = 0.0;
    for (int o = 0; o < 2; ++o) want += p.weights[0][o * 3 + i] * up[o];
    EXPECT_DOUBLE_EQ(dx[i], want);
  }
}

double Objective(const MlpParams<double>& p, const std::vector<double>& x,
                 const std::vector<double>& up) {
  auto out = ReferenceForward(p, x);
  double s = 0.0;
  for (size_t i = 0; i < out.size(); ++i) s += out[i] * up[i];
  return s;
}

// Central finite differences over every weight, bias, and input coordinate.
void CheckGradients(const MlpSpec& spec, uint64_t seed) {
  Rng rng(seed);
  auto p = MlpParams<double>::init(spec, rng);
  for (auto& b : p.biases) {
    for (auto& v : b) v = rng.uniform(-0.3, 0.3);
  }
  std::vector<double> x(spec.input_dim());
  for (auto& v : x) v = rng.uniform(-1.5, 1.5);
  std::vector<double> up(spec.output_dim());
  for (auto& v : up) v = rng.uniform(-2.0, 2.0);

  auto [out, cache] = mlp_forward(p, x);
  auto [grads, dx] = mlp_backward(p, cache, up);

  const double h = 1e-6;
  auto check = [&](double analytic, double* slot, const char* what) {
    const double base = *slot;
    *slot = base + h;
    const double fp = Objective(p, x, up);
    *slot = base - h;
    const double fm = Objective(p, x, up);
    *slot = base;
    const double fd = (fp - fm) / (2 * h);
    const double scale = std::max({std::abs(fd), std::abs(analytic), 1e-6});
    EXPECT_LT(std::abs(fd - analytic) / scale, 1e-5) << what;
  };
  for (size_t l = 0; l < spec.layers.size(); ++l) {
    for (size_t i = 0; i < p.weights[l].size(); ++i) {
      check(grads.dweights[l][i], &p.weights[l][i], "weight");
    }
    for (size_t i = 0; i < p.biases[l].size(); ++i) {
      check(grads.dbiases[l][i], &p.biases[l][i], "bias");
    }
  }
  for (size_t i = 0; i < x.size(); ++i) {
    check(dx[i], &x[i], "input");
  }
}

TEST(MlpTest, BackwardMatchesFiniteDifferences) {
  for (uint64_t seed : {11u, 12u, 13u}) {
    CheckGradients(SmallSpec(), seed);
  }
  MlpSpec linear;
  linear.layers.push_back({4, 4, Activation::kNone});
  CheckGradients(linear, 21);
  MlpSpec deep;
  deep.layers.push_back({6, 8, Activation::kRelu});
  deep.layers.push_back({8, 8, Activation::kRelu});
  deep.layers.push_back({8, 8, Activation::kRelu});
  deep.layers.push_back({8, 2, Activation::kNone});
  CheckGradients(deep, 22);
}

TEST(MlpTest, BackwardRejectsMismatchedCache) {
  Rng rng(2);
  auto p = MlpParams<double>::init(SmallSpec(), rng);
  auto [out, cache] = mlp_forward(p, {0.1, 0.2, 0.3, 0.4, 0.5});
  MlpSpec other;
  other.layers.push_back({5, 3, Activation::kNone});
  auto q = MlpParams<double>::init(other, rng);
  EXPECT_THROW(mlp_backward(q, cache, {1.0, 1.0, 1.0}),
               std::invalid_argument);
  EXPECT_THROW(mlp_backward(p, cache, {1.0, 1.0}), std::invalid_argument);
}

TEST(MlpTest, GlorotInitBoundsAndBiasZero) {
  Rng rng(40);
  auto p = MlpParams<float>::init(SmallSpec(), rng);
  for (size_t l = 0; l < p.spec.layers.size(); ++l) {
    const double bound = std::sqrt(
        6.0 / (p.spec.layers[l].in + p.spec.layers[l].out));
    for (float w : p.weights[l]) EXPECT_LE(std::abs(w), bound);
    for (float b : p.biases[l]) EXPECT_EQ(b, 0.0f);
  }
}

TEST(MlpTest, ActivationNamesRoundTrip) {
  for (Activation a :
       {Activation::kNone, Activation::kRelu, Activation::kSigmoid}) {
    EXPECT_EQ(activation_from_name(activation_name(a)), a);
  }
  EXPECT_THROW(activation_from_name("tanh"), std::invalid_argument);
}

}  // namespace
}  // namespace voxelstyle
