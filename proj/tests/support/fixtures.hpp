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

#include <memory>
#include <string>

#include <torch/torch.h>

#include "layercomp/nets/checkpoint.hpp"
#include "layercomp/nets/inference.hpp"
#include "layercomp/nets/networks.hpp"

namespace layercomp::testing {

/// Untrained weights with every parameter jittered so outputs depend on the
/// inputs (output layers start at zero otherwise).
inline ModelCheckpoint jittered_checkpoint(const std::string& kind, torch::nn::Module& module,
                                           const NetConfig& config, std::uint64_t seed) {
  torch::manual_seed(seed);
  {
    torch::NoGradGuard no_grad;
    for (auto& p : module.parameters()) p.add_(torch::randn_like(p) * 0.05);
  }
  ModelCheckpoint ckpt;
  ckpt.kind = kind;
  ckpt.config = config;
  ckpt.tensors = module_state(module, kGeneratorPrefix);
  return ckpt;
}

inline NetConfig tiny_config(int image_size = 32, int n_classes = 3) {
  return NetConfig::desk(image_size, n_classes);
}

inline std::shared_ptr<GeneratorSet> random_generators(const NetConfig& config, std::uint64_t seed = 1,
                                                       bool with_mask = true) {
  torch::manual_seed(seed);
  BackgroundGenerator bg(config);
  ForegroundGenerator fg(config);
  MaskGenerator mask(config);
  const auto bg_ckpt = jittered_checkpoint("background", *bg, config, seed);
  const auto fg_ckpt = jittered_checkpoint("foreground", *fg, config, seed + 1);
  const auto mask_ckpt = jittered_checkpoint("mask", *mask, config, seed + 2);
  return std::make_shared<GeneratorSet>(make_generators(bg_ckpt, fg_ckpt, with_mask ? &mask_ckpt : nullptr));
}

}  // namespace layercomp::testing
