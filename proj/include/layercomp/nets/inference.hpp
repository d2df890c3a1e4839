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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "layercomp/canvas.hpp"
#include "layercomp/layout.hpp"
#include "layercomp/nets/checkpoint.hpp"
#include "layercomp/nets/networks.hpp"

namespace layercomp {

// Single-sample inference on value types. All calls run without autograd and
// never mutate weights, so one set of modules may serve concurrent callers.

using NoiseVector = std::vector<float>;

struct BgForwardResult {
  Canvas background;
  Canvas scene;
};

BgForwardResult bg_forward(BackgroundGenerator& g, const NoiseVector& z, const AggregatedMap& m_agg);

/// Branch 1 only.
Canvas bg_inference(BackgroundGenerator& g, const NoiseVector& z);

/// `masked_canvas` must already be zero under the mask's occupancy
/// (kContract otherwise).
Canvas fg_forward(ForegroundGenerator& g, const Canvas& masked_canvas, const InstanceMask& mask,
                  const NoiseVector& z);

/// Probability map thresholded at 0.5. When no pixel passes, the most
/// probable pixel inside the box is kept so the mask is never empty.
InstanceMask mask_gen_forward(MaskGenerator& g, const BBox& box, int class_id, const NoiseVector& z);

/// Generator modules restored from checkpoints, in eval mode.
struct GeneratorSet {
  NetConfig config;
  BackgroundGenerator background{nullptr};
  ForegroundGenerator foreground{nullptr};
  MaskGenerator mask{nullptr};  // null when no mask checkpoint was given
  std::string background_hash;
  std::string foreground_hash;
  std::string mask_hash;

  bool has_mask_generator() const { return !mask.is_empty(); }
};

/// Generator prefix inside checkpoints written by the trainer.
inline constexpr const char* kGeneratorPrefix = "g.";

GeneratorSet load_generators(const std::filesystem::path& bg_ckpt,
                             const std::filesystem::path& fg_ckpt,
                             const std::optional<std::filesystem::path>& mask_ckpt = std::nullopt);
GeneratorSet make_generators(const ModelCheckpoint& bg, const ModelCheckpoint& fg,
                             const ModelCheckpoint* mask = nullptr);

}  // namespace layercomp
