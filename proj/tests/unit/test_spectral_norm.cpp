// Copyright 2026 The LayerComp Authors. All Rights Reserved.
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
#include <gtest/gtest.h>
#include <torch/torch.h>

#include "layercomp/nets/spectral_norm.hpp"
#include "oracles.hpp"

namespace layercomp {
namespace {

Eigen::MatrixXd to_eigen(const torch::Tensor& t) {
  auto d = t.to(torch::kDouble).contiguous();
  Eigen::MatrixXd m(d.size(0), d.size(1));
  for (int64_t i = 0; i < d.size(0); ++i)
    for (int64_t j = 0; j < d.size(1); ++j) m(i, j) = d[i][j].item<double>();
  return m;
}

TEST(SpectralNorm, NormalizedSigmaNearOneAfterPowerIterations) {
  torch::manual_seed(4);
  for (int trial = 0; trial < 20; ++trial) {
    auto w = torch::randn({6 + trial % 5, 9}, torch::kDouble) * (0.1 + trial);
    auto u = torch::randn({w.size(0)}, torch::kDouble);
    u /= u.norm();
    const auto normalized = spectral_normalize(w, u, 20, true);
    const double sigma = oracle::largest_singular_value(to_eigen(normalized));
    EXPECT_GT(sigma, 0.95);
    EXPECT_LT(sigma, 1.05);
    EXPECT_NEAR(spectral_sigma_estimate(w, u), oracle::largest_singular_value(to_eigen(w)),
                0.05 * oracle::largest_singular_value(to_eigen(w)));
  }
}

TEST(SpectralNorm, ZeroMatrixStaysZero) {
  auto w = torch::zeros({3, 4});
  auto u = torch::ones({3}) / std::sqrt(3.0);
  const auto out = spectral_normalize(w, u, 5, true);
  EXPECT_TRUE(torch::isfinite(out).all().item<bool>());
  EXPECT_EQ(out.abs().sum().item<double>(), 0.0);
}

TEST(SpectralNorm, NoUpdateLeavesVectorAlone) {
  auto w = torch::randn({4, 5});
  auto u = torch::randn({4});
  const auto before = u.clone();
  spectral_normalize(w, u, 3, false);
  EXPECT_TRUE(torch::equal(u, before));
  spectral_normalize(w, u, 3, true);
  EXPECT_FALSE(torch::equal(u, before));
}

TEST(SpectralNorm, GradientFlowsOnlyThroughWeight) {
  auto w = torch::randn({3, 3}, torch::kDouble).requires_grad_(true);
  auto u = torch::randn({3}, torch::kDouble);
  spectral_normalize(w, u, 1, true).sum().backward();
  EXPECT_TRUE(w.grad().defined());
  EXPECT_FALSE(u.requires_grad());
}

TEST(SpectralNorm, EvalModeForwardIsStable) {
  ConvLayerOptions opts(3, 4, 3);
  opts.spectral = true;
  opts.padding = 1;
  ConvLayer layer(opts);
  layer->eval();
  auto x = torch::randn({1, 3, 5, 5});
  const auto a = layer->forward(x), b = layer->forward(x);
  EXPECT_TRUE(torch::equal(a, b));
}

}  // namespace
}  // namespace layercomp
