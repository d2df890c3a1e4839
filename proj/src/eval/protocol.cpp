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
#include "layercomp/composer.hpp"
#include "layercomp/error.hpp"
#include "layercomp/eval.hpp"
#include "layercomp/rng.hpp"

namespace layercomp {

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j = {{"fid", fid},
                      {"iou_train", iou_train.to_json()},
                      {"iou_val", iou_val ? iou_val->to_json() : nlohmann::json(nullptr)},
                      {"n_images", n_images},
                      {"seed", seed},
                      {"mode", mode},
                      {"provider", provider},
                      {"segmenter", segmenter},
                      {"config_hash", config_hash},
                      {"checkpoints", checkpoints}};
  return j;
}

namespace {

struct ComposedSet {
  std::vector<Canvas> images;
  std::vector<SemanticLayout> layouts;
  std::vector<int> records;
};

ComposedSet compose_from(const EvalProtocolInputs& in, const DatasetIndex& data, std::uint64_t stream) {
  ComposedSet out;
  Rng rng(derive_seed(in.seed, stream));
  const auto mode = in.hard_mode ? ComposeMode::kHard : ComposeMode::kRaw;
  for (int i = 0; i < in.n_images; ++i) {
    const int r = static_cast<int>(rng.below(static_cast<std::uint64_t>(data.size())));
    const auto& layout = data.record(r).layout;
    const std::uint64_t bg_seed = rng.next_u64();
    const auto seeds = object_seeds_for(rng.next_u64(), layout.size());
    out.images.push_back(compose(in.generators, layout, bg_seed, seeds, mode));
    out.layouts.push_back(layout);
    out.records.push_back(r);
  }
  return out;
}

IouResult score(const Segmenter& seg, const ComposedSet& set) {
  std::vector<std::vector<std::int32_t>> pred;
  pred.reserve(set.images.size());
  for (const auto& img : set.images) pred.push_back(seg.segment(img));
  return mean_iou(pred, set.layouts);
}

}  // namespace

EvalReport eval_protocol(const EvalProtocolInputs& in) {
  require(in.generators != nullptr, ErrorCode::kInvalidInput, "generators are required");
  require(in.train != nullptr && !in.train->empty(), ErrorCode::kInvalidInput, "a training dataset is required");
  require(in.provider != nullptr && in.segmenter != nullptr, ErrorCode::kInvalidInput,
          "a feature provider and a segmenter are required");
  require(in.n_images >= 2, ErrorCode::kInvalidInput, "at least two images are needed");
  require(in.train->image_size() == in.generators->config.image_size, ErrorCode::kInvalidInput,
          "dataset and generators disagree on image size");

  const auto train_set = compose_from(in, *in.train, 1);
  std::vector<Canvas> real;
  real.reserve(train_set.records.size());
  for (int r : train_set.records) real.push_back(in.train->image(r));

  EvalReport report;
  report.fid = fid(real, train_set.images, *in.provider);
  report.iou_train = score(*in.segmenter, train_set);
  if (in.val != nullptr && !in.val->empty()) report.iou_val = score(*in.segmenter, compose_from(in, *in.val, 2));
  report.n_images = in.n_images;
  report.seed = in.seed;
  report.mode = in.hard_mode ? "hard" : "raw";
  report.provider = in.provider->describe();
  report.segmenter = in.segmenter->describe();
  report.config_hash = in.generators->config.hash();
  report.checkpoints = {{"background", in.generators->background_hash},
                        {"foreground", in.generators->foreground_hash},
                        {"mask", in.generators->mask_hash.empty() ? nlohmann::json(nullptr)
                                                                  : nlohmann::json(in.generators->mask_hash)}};
  return report;
}

}  // namespace layercomp
