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
#include "layercomp/nets/inference.hpp"

#include "layercomp/error.hpp"
#include "layercomp/nets/tensors.hpp"

namespace layercomp {

namespace {

torch::Tensor noise_tensor(const NoiseVector& z, const NetConfig& config) {
  require(static_cast<int>(z.size()) == config.z_dim, ErrorCode::kInvalidInput,
          "noise length does not match z_dim");
  return noise_batch({z});
}

void require_frame(int height, int width, const NetConfig& config) {
  require(height == config.image_size && width == config.image_size, ErrorCode::kInvalidInput,
          "input size does not match the network's image size");
}

}  // namespace

BgForwardResult bg_forward(BackgroundGenerator& g, const NoiseVector& z, const AggregatedMap& m_agg) {
  const auto& config = g->config();
  require_frame(m_agg.height(), m_agg.width(), config);
  require(m_agg.n_classes() == config.n_classes, ErrorCode::kInvalidInput,
          "class count does not match the network");
  torch::NoGradGuard no_grad;
  auto out = g->forward(noise_tensor(z, config), to_tensor(m_agg).unsqueeze(0));
  return {to_canvas(out.background), to_canvas(out.scene)};
}

Canvas bg_inference(BackgroundGenerator& g, const NoiseVector& z) {
  torch::NoGradGuard no_grad;
  return to_canvas(g->background(noise_tensor(z, g->config())));
}

Canvas fg_forward(ForegroundGenerator& g, const Canvas& masked_canvas, const InstanceMask& mask,
                  const NoiseVector& z) {
  const auto& config = g->config();
  require_frame(masked_canvas.height(), masked_canvas.width(), config);
  require(masked_canvas.channels() == 3, ErrorCode::kInvalidInput, "canvas must have 3 channels");
  require(mask.height() == masked_canvas.height() && mask.width() == masked_canvas.width() &&
              mask.n_classes() == config.n_classes,
          ErrorCode::kInvalidInput, "mask shape does not match the canvas");
  const auto& plane = mask.plane();
  for (int i = 0; i < plane.height(); ++i) {
    for (int j = 0; j < plane.width(); ++j) {
      if (!plane.at(i, j)) continue;
      for (int c = 0; c < 3; ++c) {
        require(masked_canvas.at(i, j, c) == 0.0f, ErrorCode::kContract,
                "canvas is not masked out under the object");
      }
    }
  }
  torch::NoGradGuard no_grad;
  auto out = g->forward(to_tensor(masked_canvas).unsqueeze(0), to_tensor(mask).unsqueeze(0),
                        noise_tensor(z, config));
  return to_canvas(out);
}

InstanceMask mask_gen_forward(MaskGenerator& g, const BBox& box, int class_id, const NoiseVector& z) {
  const auto& config = g->config();
  const int size = config.image_size;
  require(class_id >= 0 && class_id < config.n_classes, ErrorCode::kInvalidInput,
          "class id out of range");
  require(box.valid_for(size, size), ErrorCode::kInvalidInput, "box outside the frame");
  torch::NoGradGuard no_grad;
  auto onehot = torch::zeros({1, config.n_classes});
  onehot[0][class_id] = 1.0f;
  auto probs = g->full_frame(onehot, {box}, noise_tensor(z, config)).contiguous();
  auto acc = probs.accessor<float, 4>();
  OccupancyMap plane(size, size);
  float best = -1.0f;
  int best_r = box.row_min, best_c = box.col_min;
  for (int i = box.row_min; i <= box.row_max; ++i) {
    for (int j = box.col_min; j <= box.col_max; ++j) {
      const float p = acc[0][0][i][j];
      if (p > 0.5f) plane.set(i, j);
      if (p > best) {
        best = p;
        best_r = i;
        best_c = j;
      }
    }
  }
  if (!plane.any()) plane.set(best_r, best_c);
  return InstanceMask(std::move(plane), class_id, config.n_classes);
}

GeneratorSet make_generators(const ModelCheckpoint& bg, const ModelCheckpoint& fg,
                             const ModelCheckpoint* mask) {
  require(bg.kind == "background", ErrorCode::kCheckpoint, "expected a background checkpoint");
  require(fg.kind == "foreground", ErrorCode::kCheckpoint, "expected a foreground checkpoint");
  require(bg.config == fg.config, ErrorCode::kVersion,
          "background and foreground checkpoints use different network configs");
  GeneratorSet set;
  set.config = bg.config;
  set.background = BackgroundGenerator(bg.config);
  load_module_state(*set.background, bg, kGeneratorPrefix);
  set.background->eval();
  set.background_hash = bg.fingerprint();
  set.foreground = ForegroundGenerator(fg.config);
  load_module_state(*set.foreground, fg, kGeneratorPrefix);
  set.foreground->eval();
  set.foreground_hash = fg.fingerprint();
  if (mask != nullptr) {
    require(mask->kind == "mask", ErrorCode::kCheckpoint, "expected a mask checkpoint");
    require(mask->config == bg.config, ErrorCode::kVersion,
            "mask checkpoint uses a different network config");
    set.mask = MaskGenerator(mask->config);
    load_module_state(*set.mask, *mask, kGeneratorPrefix);
    set.mask->eval();
    set.mask_hash = mask->fingerprint();
  }
  return set;
}

GeneratorSet load_generators(const std::filesystem::path& bg_ckpt,
                             const std::filesystem::path& fg_ckpt,
                             const std::optional<std::filesystem::path>& mask_ckpt) {
  const auto bg = load_checkpoint(bg_ckpt);
  const auto fg = load_checkpoint(fg_ckpt);
  if (mask_ckpt) {
    const auto mask = load_checkpoint(*mask_ckpt);
    return make_generators(bg, fg, &mask);
  }
  return make_generators(bg, fg);
}

}  // namespace layercomp
