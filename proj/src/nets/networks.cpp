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
#include "layercomp/nets/networks.hpp"

#include "layercomp/error.hpp"
#include "layercomp/nets/roi.hpp"

namespace layercomp {

namespace F = torch::nn::functional;

namespace {

ConvLayer conv(int64_t in, int64_t out, int64_t kernel, bool spectral = false) {
  ConvLayerOptions o(in, out, kernel);
  o.padding = kernel / 2;
  o.spectral = spectral;
  return ConvLayer(o);
}

torch::Tensor up2(const torch::Tensor& x) {
  return F::interpolate(x, F::InterpolateFuncOptions()
                               .scale_factor(std::vector<double>{2.0, 2.0})
                               .mode(torch::kNearest));
}

torch::Tensor down2(const torch::Tensor& x) { return F::avg_pool2d(x, F::AvgPool2dFuncOptions(2)); }

}  // namespace

UpBlockImpl::UpBlockImpl(int64_t in, int64_t out) {
  conv1_ = register_module("conv1", conv(in, out, 3));
  conv2_ = register_module("conv2", conv(out, out, 3));
  shortcut_ = register_module("shortcut", conv(in, out, 1));
}

torch::Tensor UpBlockImpl::forward(const torch::Tensor& x) {
  auto h = conv1_->forward(up2(torch::relu(x)));
  h = conv2_->forward(torch::relu(h));
  return h + up2(shortcut_->forward(x));
}

DownBlockImpl::DownBlockImpl(int64_t in, int64_t out, bool spectral, bool preactivate)
    : preactivate_(preactivate) {
  conv1_ = register_module("conv1", conv(in, out, 3, spectral));
  conv2_ = register_module("conv2", conv(out, out, 3, spectral));
  shortcut_ = register_module("shortcut", conv(in, out, 1, spectral));
}

torch::Tensor DownBlockImpl::forward(const torch::Tensor& x) {
  auto h = conv1_->forward(preactivate_ ? torch::relu(x) : x);
  h = down2(conv2_->forward(torch::relu(h)));
  return h + shortcut_->forward(down2(x));
}

ResBlockImpl::ResBlockImpl(int64_t channels) {
  conv1_ = register_module("conv1", conv(channels, channels, 3));
  conv2_ = register_module("conv2", conv(channels, channels, 3));
}

torch::Tensor ResBlockImpl::forward(const torch::Tensor& x) {
  auto h = conv1_->forward(torch::relu(x));
  return x + conv2_->forward(torch::relu(h));
}

torch::Tensor tile_vector(const torch::Tensor& v, int64_t h, int64_t w) {
  return v.view({v.size(0), v.size(1), 1, 1}).expand({v.size(0), v.size(1), h, w});
}

// ---- background generator ---------------------------------------------------

BackgroundGeneratorImpl::BackgroundGeneratorImpl(const NetConfig& config) : config_(config) {
  config_.validate();
  const int n = config_.n_blocks;
  const int64_t top = config_.channels(n);
  const int64_t bottom = config_.bottom_size();
  fc_ = register_module("fc", LinearLayer(config_.z_dim, top * bottom * bottom, false));
  bg_up_ = register_module("bg_up", torch::nn::ModuleList());
  scene_up_ = register_module("scene_up", torch::nn::ModuleList());
  layout_down_ = register_module("layout_down", torch::nn::ModuleList());
  for (int l = n; l >= 1; --l) {
    bg_up_->push_back(UpBlock(config_.channels(l), config_.channels(l - 1)));
    scene_up_->push_back(UpBlock(config_.channels(l), config_.channels(l - 1)));
  }
  bg_out_ = register_module("bg_out", conv(config_.channels(0), 3, 3));
  layout_in_ = register_module("layout_in", conv(config_.n_classes, config_.channels(0), 3));
  for (int l = 0; l < n; ++l) {
    layout_down_->push_back(DownBlock(config_.channels(l), config_.channels(l + 1), false));
  }
  fuse_ = register_module("fuse", conv(2 * top, top, 1));
  fuse_block_ = register_module("fuse_block", ResBlock(top));
  scene_out_ = register_module("scene_out", conv(config_.channels(0), 3, 3));
}

torch::Tensor BackgroundGeneratorImpl::seed_features(const torch::Tensor& z) {
  require(z.dim() == 2 && z.size(1) == config_.z_dim, ErrorCode::kInvalidInput,
          "background noise must be (B, z_dim)");
  const int64_t bottom = config_.bottom_size();
  return fc_->forward(z).view({z.size(0), config_.channels(config_.n_blocks), bottom, bottom});
}

torch::Tensor BackgroundGeneratorImpl::decode_background(torch::Tensor h) {
  for (auto& block : *bg_up_) h = block->as<UpBlock>()->forward(h);
  return torch::tanh(bg_out_->forward(torch::relu(h)));
}

torch::Tensor BackgroundGeneratorImpl::background(const torch::Tensor& z) {
  return decode_background(seed_features(z));
}

torch::Tensor BackgroundGeneratorImpl::decode_scene(const torch::Tensor& tap,
                                                    const torch::Tensor& m_agg) {
  require(m_agg.dim() == 4 && m_agg.size(1) == config_.n_classes &&
              m_agg.size(2) == config_.image_size && m_agg.size(3) == config_.image_size,
          ErrorCode::kInvalidInput, "aggregated map must be (B, N, H, W)");
  auto h = layout_in_->forward(m_agg);
  for (auto& block : *layout_down_) h = block->as<DownBlock>()->forward(h);
  h = fuse_block_->forward(fuse_->forward(torch::cat({h, tap}, 1)));
  for (auto& block : *scene_up_) h = block->as<UpBlock>()->forward(h);
  return torch::tanh(scene_out_->forward(torch::relu(h)));
}

torch::Tensor BackgroundGeneratorImpl::scene(const torch::Tensor& z, const torch::Tensor& m_agg) {
  return decode_scene(seed_features(z), m_agg);
}

BackgroundOutput BackgroundGeneratorImpl::forward(const torch::Tensor& z, const torch::Tensor& m_agg) {
  auto tap = seed_features(z);
  BackgroundOutput out;
  out.background = decode_background(tap);
  out.scene = decode_scene(tap, m_agg);
  return out;
}

// ---- foreground generator ----------------------------------------------------

ForegroundGeneratorImpl::ForegroundGeneratorImpl(const NetConfig& config) : config_(config) {
  config_.validate();
  const int n = config_.n_blocks;
  const int64_t zc = config_.z_dim;
  noise_level_ = n >= 2 ? n - 1 : n;
  scene_in_ = register_module("scene_in", conv(3, config_.channels(0), 3));
  mask_in_ = register_module("mask_in", conv(config_.n_classes, config_.channels(0), 3));
  scene_down_ = register_module("scene_down", torch::nn::ModuleList());
  mask_down_ = register_module("mask_down", torch::nn::ModuleList());
  for (int l = 0; l < n; ++l) {
    scene_down_->push_back(DownBlock(config_.channels(l), config_.channels(l + 1), false));
    mask_down_->push_back(DownBlock(config_.channels(l), config_.channels(l + 1), false));
  }
  const int64_t top = config_.channels(n);
  bottleneck_ = register_module("bottleneck", conv(2 * top + zc, top, 1));
  bottleneck_block_ = register_module("bottleneck_block", ResBlock(top));
  up_ = register_module("up", torch::nn::ModuleList());
  for (int l = n; l >= 1; --l) {
    int64_t in = config_.channels(l);
    if (l < n) in += config_.channels(l);  // scene skip
    if (l == noise_level_) in += zc;
    up_->push_back(UpBlock(in, config_.channels(l - 1)));
  }
  const int64_t c0 = config_.channels(0);
  out1_ = register_module("out1", conv(2 * c0 + 3 + config_.n_classes, c0, 3));
  out2_ = register_module("out2", conv(c0, 3, 3));
}

torch::Tensor ForegroundGeneratorImpl::forward(const torch::Tensor& masked_scene,
                                               const torch::Tensor& mask, const torch::Tensor& z) {
  const int n = config_.n_blocks;
  const int64_t size = config_.image_size;
  require(masked_scene.dim() == 4 && masked_scene.size(1) == 3 && masked_scene.size(2) == size &&
              masked_scene.size(3) == size,
          ErrorCode::kInvalidInput, "masked scene must be (B, 3, H, W)");
  require(mask.dim() == 4 && mask.size(1) == config_.n_classes, ErrorCode::kInvalidInput,
          "instance mask must be (B, N, H, W)");
  require(z.dim() == 2 && z.size(1) == config_.z_dim, ErrorCode::kInvalidInput,
          "noise must be (B, z_dim)");

  std::vector<torch::Tensor> skips;
  auto e = scene_in_->forward(masked_scene);
  skips.push_back(e);
  for (auto& block : *scene_down_) {
    e = block->as<DownBlock>()->forward(e);
    skips.push_back(e);
  }
  auto m = mask_in_->forward(mask);
  for (auto& block : *mask_down_) m = block->as<DownBlock>()->forward(m);

  const int64_t bottom = config_.bottom_size();
  auto h = bottleneck_->forward(torch::cat({e, m, tile_vector(z, bottom, bottom)}, 1));
  h = bottleneck_block_->forward(h);

  int level = n;
  for (auto& block : *up_) {
    std::vector<torch::Tensor> parts{h};
    if (level < n) parts.push_back(skips[static_cast<std::size_t>(level)]);
    if (level == noise_level_) parts.push_back(tile_vector(z, h.size(2), h.size(3)));
    h = block->as<UpBlock>()->forward(parts.size() == 1 ? h : torch::cat(parts, 1));
    --level;
  }
  auto out = torch::cat({torch::relu(h), torch::relu(skips[0]), masked_scene, mask}, 1);
  out = out1_->forward(out);
  return torch::tanh(out2_->forward(torch::relu(out)));
}

// ---- mask generator -------------------------------------------------------------

MaskGeneratorImpl::MaskGeneratorImpl(const NetConfig& config) : config_(config) {
  config_.validate();
  while ((4 << levels_) < config_.mask_crop_size) ++levels_;
  const int64_t in = config_.z_dim + config_.n_classes + 4;
  fc_ = register_module("fc", LinearLayer(in, config_.channels(levels_) * 16, false));
  up_ = register_module("up", torch::nn::ModuleList());
  for (int l = levels_; l >= 1; --l) up_->push_back(UpBlock(config_.channels(l), config_.channels(l - 1)));
  out_ = register_module("out", conv(config_.channels(0), 1, 3));
}

torch::Tensor MaskGeneratorImpl::forward(const torch::Tensor& class_onehot,
                                         const torch::Tensor& box_geometry, const torch::Tensor& z) {
  require(class_onehot.dim() == 2 && class_onehot.size(1) == config_.n_classes,
          ErrorCode::kInvalidInput, "class one-hot must be (B, N)");
  require(box_geometry.dim() == 2 && box_geometry.size(1) == 4, ErrorCode::kInvalidInput,
          "box geometry must be (B, 4)");
  auto h = fc_->forward(torch::cat({z, class_onehot, box_geometry}, 1))
               .view({z.size(0), config_.channels(levels_), 4, 4});
  for (auto& block : *up_) h = block->as<UpBlock>()->forward(h);
  return torch::sigmoid(out_->forward(torch::relu(h)));
}

torch::Tensor MaskGeneratorImpl::full_frame(const torch::Tensor& class_onehot,
                                            const std::vector<BBox>& boxes, const torch::Tensor& z) {
  const int size = config_.image_size;
  auto crops = forward(class_onehot, box_geometry(boxes, size, size), z);
  return paste_into_boxes(crops, boxes, size, size);
}

torch::Tensor box_geometry(const std::vector<BBox>& boxes, int height, int width) {
  auto out = torch::empty({static_cast<int64_t>(boxes.size()), 4});
  auto acc = out.accessor<float, 2>();
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    acc[b][0] = static_cast<float>(boxes[b].row_min) / height;
    acc[b][1] = static_cast<float>(boxes[b].row_max + 1) / height;
    acc[b][2] = static_cast<float>(boxes[b].col_min) / width;
    acc[b][3] = static_cast<float>(boxes[b].col_max + 1) / width;
  }
  return out;
}

torch::Tensor paste_into_boxes(const torch::Tensor& crops, const std::vector<BBox>& boxes,
                               int height, int width) {
  require(crops.dim() == 4 && crops.size(0) == static_cast<int64_t>(boxes.size()),
          ErrorCode::kInvalidInput, "one box per crop is required");
  const int s_h = static_cast<int>(crops.size(2));
  const int s_w = static_cast<int>(crops.size(3));
  const BBox whole{0, s_h - 1, 0, s_w - 1};
  std::vector<torch::Tensor> frames;
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    const BBox& box = boxes[b];
    require(box.valid_for(height, width), ErrorCode::kInvalidInput, "box outside frame");
    auto patch = bilinear_roi(crops.slice(0, static_cast<int64_t>(b), static_cast<int64_t>(b) + 1),
                              {whole}, box.rows(), box.cols());
    frames.push_back(torch::constant_pad_nd(
        patch, {box.col_min, width - 1 - box.col_max, box.row_min, height - 1 - box.row_max}, 0.0));
  }
  return torch::cat(frames, 0);
}

// ---- discriminators ---------------------------------------------------------------

DiscriminatorImpl::DiscriminatorImpl(int64_t in_channels, const NetConfig& config, int blocks) {
  require(blocks >= 1, ErrorCode::kConfig, "discriminator needs at least one block");
  blocks_ = register_module("blocks", torch::nn::ModuleList());
  int64_t in = in_channels;
  for (int l = 0; l < blocks; ++l) {
    blocks_->push_back(DownBlock(in, config.d_channels(l), true, l > 0));
    in = config.d_channels(l);
  }
  fc_ = register_module("fc", LinearLayer(in, 1, true));
}

DiscriminatorOutput DiscriminatorImpl::forward(const torch::Tensor& x) {
  DiscriminatorOutput out;
  auto h = x;
  for (auto& block : *blocks_) {
    h = block->as<DownBlock>()->forward(h);
    out.features.push_back(torch::relu(h));
  }
  out.score = fc_->forward(out.features.back().sum({2, 3})).squeeze(1);
  return out;
}

Discriminator make_image_discriminator(const NetConfig& config) {
  config.validate();
  return Discriminator(3 + config.n_classes, config, config.d_blocks);
}

Discriminator make_mask_discriminator(const NetConfig& config) {
  config.validate();
  int blocks = 0;
  while ((config.mask_crop_size >> (blocks + 1)) >= 4 && blocks < config.d_blocks) ++blocks;
  return Discriminator(1 + config.n_classes, config, std::max(1, blocks));
}

DiscriminatorOutput disc_global_forward(Discriminator& d, const torch::Tensor& image,
                                        const torch::Tensor& m_agg) {
  return d->forward(torch::cat({image, m_agg}, 1));
}

DiscriminatorOutput disc_local_forward(Discriminator& d, const torch::Tensor& image,
                                       const torch::Tensor& m_agg, const std::vector<BBox>& boxes,
                                       int64_t crop_size) {
  auto img = bilinear_roi(image, boxes, crop_size, crop_size);
  auto agg = bilinear_roi(m_agg, boxes, crop_size, crop_size);
  return d->forward(torch::cat({img, agg}, 1));
}

}  // namespace layercomp
