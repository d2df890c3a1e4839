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

#include "layercomp/nets/roi.hpp"
#include "oracles.hpp"

namespace layercomp {
namespace {

torch::Tensor to_tensor_1ch(const std::vector<double>& v, int h, int w) {
  return torch::tensor(v, torch::kDouble).view({1, 1, h, w});
}

TEST(BilinearRoi, FullFrameIdentityCropIsExact) {
  auto x = torch::randn({2, 3, 7, 5});
  const std::vector<BBox> boxes(2, BBox{0, 6, 0, 4});
  EXPECT_TRUE(torch::equal(bilinear_roi(x, boxes, 7, 5), x));
}

TEST(BilinearRoi, SubBoxAtNativeSizeCopiesPixels) {
  auto x = torch::randn({1, 2, 8, 8});
  const auto out = bilinear_roi(x, {BBox{2, 5, 1, 3}}, 4, 3);
  EXPECT_TRUE(torch::equal(out, x.index({torch::indexing::Slice(), torch::indexing::Slice(),
                                         torch::indexing::Slice(2, 6), torch::indexing::Slice(1, 4)})));
}

TEST(BilinearRoi, MatchesScalarOracle) {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const int h = 2 + static_cast<int>(rng.below(8)), w = 2 + static_cast<int>(rng.below(8));
    std::vector<double> img(static_cast<std::size_t>(h) * w);
    for (auto& v : img) v = rng.normal();
    const int r0 = static_cast<int>(rng.below(h)), c0 = static_cast<int>(rng.below(w));
    const BBox box{r0, r0 + static_cast<int>(rng.below(h - r0)), c0, c0 + static_cast<int>(rng.below(w - c0))};
    const int oh = 1 + static_cast<int>(rng.below(9)), ow = 1 + static_cast<int>(rng.below(9));
    const auto got = bilinear_roi(to_tensor_1ch(img, h, w), {box}, oh, ow).contiguous();
    const auto want = oracle::bilinear_crop(img, h, w, box, oh, ow);
    ASSERT_EQ(got.numel(), static_cast<int64_t>(want.size()));
    const auto* p = got.data_ptr<double>();
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(p[i], want[i], 1e-12);
  }
}

TEST(BilinearRoi, GradientMatchesFiniteDifferences) {
  torch::manual_seed(3);
  auto x = torch::randn({1, 1, 6, 6}, torch::kDouble).requires_grad_(true);
  const std::vector<BBox> boxes{BBox{1, 4, 0, 5}};
  auto weights = torch::randn({1, 1, 5, 3}, torch::kDouble);
  auto loss = (bilinear_roi(x, boxes, 5, 3) * weights).sum();
  loss.backward();
  const auto grad = x.grad().clone();
  const double eps = 1e-6;
  torch::NoGradGuard no_grad;
  auto flat = x.detach().clone().view(-1);
  for (int64_t i = 0; i < flat.numel(); ++i) {
    auto plus = flat.clone(), minus = flat.clone();
    plus[i] += eps;
    minus[i] -= eps;
    const double fp = (bilinear_roi(plus.view({1, 1, 6, 6}), boxes, 5, 3) * weights).sum().item<double>();
    const double fm = (bilinear_roi(minus.view({1, 1, 6, 6}), boxes, 5, 3) * weights).sum().item<double>();
    EXPECT_NEAR(grad.view(-1)[i].item<double>(), (fp - fm) / (2 * eps), 1e-7);
  }
}

TEST(BilinearRoi, IsLinearInTheInput) {
  auto a = torch::randn({1, 2, 6, 6}), b = torch::randn({1, 2, 6, 6});
  const std::vector<BBox> boxes{BBox{0, 3, 2, 5}};
  const auto lhs = bilinear_roi(a * 2.0 + b * 3.0, boxes, 5, 7);
  const auto rhs = bilinear_roi(a, boxes, 5, 7) * 2.0 + bilinear_roi(b, boxes, 5, 7) * 3.0;
  EXPECT_LT((lhs - rhs).abs().max().item<double>(), 1e-5);
}

TEST(BilinearRoi, RejectsBadBoxes) {
  auto x = torch::randn({1, 1, 4, 4});
  EXPECT_ANY_THROW(bilinear_roi(x, {BBox{0, 4, 0, 3}}, 2, 2));
  EXPECT_ANY_THROW(bilinear_roi(x, {BBox{0, 1, 0, 1}, BBox{0, 1, 0, 1}}, 2, 2));
}

}  // namespace
}  // namespace layercomp
