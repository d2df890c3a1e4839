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
#include "layercomp/losses.hpp"

#include "layercomp/error.hpp"
#include "layercomp/nets/tensors.hpp"

namespace layercomp {

void LossWeights::validate() const {
  for (double v : {rec_bg, fm_bg, local, rec_fg, fm_fg, mask_ce, mask_adv}) {
    require(v >= 0.0, ErrorCode::kConfig, "loss weights must be non-negative");
  }
}

nlohmann::json LossWeights::to_json() const {
  return {{"rec_bg", rec_bg}, {"fm_bg", fm_bg},     {"local", local},       {"rec_fg", rec_fg},
          {"fm_fg", fm_fg},   {"mask_ce", mask_ce}, {"mask_adv", mask_adv}};
}

LossWeights LossWeights::from_json(const nlohmann::json& doc) {
  LossWeights w;
  w.rec_bg = doc.value("rec_bg", w.rec_bg);
  w.fm_bg = doc.value("fm_bg", w.fm_bg);
  w.local = doc.value("local", w.local);
  w.rec_fg = doc.value("rec_fg", w.rec_fg);
  w.fm_fg = doc.value("fm_fg", w.fm_fg);
  w.mask_ce = doc.value("mask_ce", w.mask_ce);
  w.mask_adv = doc.value("mask_adv", w.mask_adv);
  w.validate();
  return w;
}

torch::Tensor masked_l2(const torch::Tensor& a, const torch::Tensor& b, const torch::Tensor& occ) {
  require(a.sizes() == b.sizes(), ErrorCode::kInvalidInput, "masked_l2 operands differ in shape");
  require(occ.dim() == 4 && occ.size(0) == a.size(0) && occ.size(1) == 1 &&
              occ.size(2) == a.size(2) && occ.size(3) == a.size(3),
          ErrorCode::kInvalidInput, "masked_l2 occupancy must be (B, 1, H, W)");
  const auto keep = 1.0 - occ;
  const auto kept = keep.sum() * a.size(1);
  const auto sq = ((a - b) * keep).pow(2).sum();
  return torch::where(kept > 0, sq / kept.clamp_min(1.0), torch::zeros_like(sq));
}

double masked_l2(const Canvas& a, const Canvas& b, const OccupancyMap& occ) {
  require(a.same_shape(b), ErrorCode::kInvalidInput, "masked_l2 operands differ in shape");
  require(a.height() == occ.height() && a.width() == occ.width(), ErrorCode::kInvalidInput,
          "masked_l2 occupancy shape mismatch");
  double acc = 0.0;
  std::size_t kept = 0;
  for (int i = 0; i < a.height(); ++i) {
    for (int j = 0; j < a.width(); ++j) {
      if (occ.at(i, j)) continue;
      for (int c = 0; c < a.channels(); ++c) {
        const double d = double(a.at(i, j, c)) - double(b.at(i, j, c));
        acc += d * d;
        ++kept;
      }
    }
  }
  return kept == 0 ? 0.0 : acc / static_cast<double>(kept);
}

double fg_rec_loss(const Canvas& generated, const Canvas& real, const OccupancyMap& box_occ) {
  return masked_l2(generated, real, box_occ);
}

namespace {

void require_finite(const torch::Tensor& t, const char* what) {
  require(torch::isfinite(t).all().item<bool>(), ErrorCode::kDivergence,
          std::string("non-finite ") + what);
}

}  // namespace

torch::Tensor adv_loss_d(const torch::Tensor& real_scores, const torch::Tensor& fake_scores) {
  require_finite(real_scores, "real discriminator scores");
  require_finite(fake_scores, "fake discriminator scores");
  return torch::softplus(-real_scores).mean() + torch::softplus(fake_scores).mean();
}

torch::Tensor adv_loss_g(const torch::Tensor& fake_scores) {
  require_finite(fake_scores, "fake discriminator scores");
  return torch::softplus(-fake_scores).mean();
}

torch::Tensor feature_matching(const std::vector<torch::Tensor>& real_features,
                               const std::vector<torch::Tensor>& fake_features) {
  require(real_features.size() == fake_features.size() && !real_features.empty(),
          ErrorCode::kInvalidInput, "feature lists must be non-empty and of equal length");
  auto total = torch::zeros({}, fake_features.front().options());
  for (std::size_t k = 0; k < real_features.size(); ++k) {
    require(real_features[k].sizes().slice(1) == fake_features[k].sizes().slice(1),
            ErrorCode::kInvalidInput, "feature shapes differ");
    total = total + (real_features[k].mean(0) - fake_features[k].mean(0)).abs().sum();
  }
  return total;
}

torch::Tensor mask_cross_entropy(const torch::Tensor& probs, const torch::Tensor& target,
                                 const torch::Tensor& box_occ, double eps) {
  require(probs.sizes() == target.sizes() && probs.sizes() == box_occ.sizes(),
          ErrorCode::kInvalidInput, "mask cross-entropy operands differ in shape");
  const auto p = probs.clamp(eps, 1.0 - eps);
  const auto ce = -(target * torch::log(p) + (1.0 - target) * torch::log(1.0 - p));
  const auto count = box_occ.sum();
  const auto sum = (ce * box_occ).sum();
  return torch::where(count > 0, sum / count.clamp_min(1.0), torch::zeros_like(sum));
}

MaskGenLoss mask_gen_loss(const torch::Tensor& probs, const torch::Tensor& target,
                          const torch::Tensor& box_occ, const torch::Tensor& adv_term,
                          const LossWeights& w) {
  MaskGenLoss out;
  out.cross_entropy = mask_cross_entropy(probs, target, box_occ);
  out.total = out.cross_entropy * w.mask_ce + adv_term * w.mask_adv;
  return out;
}

}  // namespace layercomp
