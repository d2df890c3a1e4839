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
#pragma once

#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "layercomp/canvas.hpp"
#include "layercomp/layout.hpp"

namespace layercomp {

/// Trade-off weights of the background and foreground objectives.
struct LossWeights {
  double rec_bg = 100.0;
  double fm_bg = 1.0;
  double local = 0.1;
  double rec_fg = 1e-5;
  double fm_fg = 1.0;
  double mask_ce = 10.0;
  double mask_adv = 1.0;

  void validate() const;
  nlohmann::json to_json() const;
  static LossWeights from_json(const nlohmann::json& doc);
};

/// Mean squared difference over the pixel-channels where `occ` is 0; pixels
/// with occ = 1 are ignored. a, b: (B, C, H, W); occ: (B, 1, H, W). Zero when
/// nothing is kept.
torch::Tensor masked_l2(const torch::Tensor& a, const torch::Tensor& b, const torch::Tensor& occ);
double masked_l2(const Canvas& a, const Canvas& b, const OccupancyMap& occ);

/// Logistic discriminator loss -E[log s(real)] - E[log(1 - s(fake))] written
/// with softplus. Throws kDivergence on non-finite scores.
torch::Tensor adv_loss_d(const torch::Tensor& real_scores, const torch::Tensor& fake_scores);
/// Non-saturating generator loss -E[log s(fake)].
torch::Tensor adv_loss_g(const torch::Tensor& fake_scores);

/// Sum over layers of the L1 distance between batch-mean features.
torch::Tensor feature_matching(const std::vector<torch::Tensor>& real_features,
                               const std::vector<torch::Tensor>& fake_features);

template <typename T>
T bg_total(const T& adv, const T& rec, const T& fm, const LossWeights& w) {
  return adv + rec * w.rec_bg + fm * w.fm_bg;
}

template <typename T>
T fg_total(const T& global, const T& local, const T& rec, const T& fm, const LossWeights& w) {
  return global + local * w.local + rec * w.rec_fg + fm * w.fm_fg;
}

/// Reconstruction outside the object's bounding box (box_occ = 1 inside).
inline torch::Tensor fg_rec_loss(const torch::Tensor& generated, const torch::Tensor& real,
                                 const torch::Tensor& box_occ) {
  return masked_l2(generated, real, box_occ);
}
double fg_rec_loss(const Canvas& generated, const Canvas& real, const OccupancyMap& box_occ);

/// Per-pixel binary cross-entropy averaged over pixels inside the box
/// (probabilities clamped to [eps, 1 - eps]); zero for an empty box.
torch::Tensor mask_cross_entropy(const torch::Tensor& probs, const torch::Tensor& target,
                                 const torch::Tensor& box_occ, double eps = 1e-6);

struct MaskGenLoss {
  torch::Tensor total;
  torch::Tensor cross_entropy;
};

MaskGenLoss mask_gen_loss(const torch::Tensor& probs, const torch::Tensor& target,
                          const torch::Tensor& box_occ, const torch::Tensor& adv_term,
                          const LossWeights& w);

}  // namespace layercomp
