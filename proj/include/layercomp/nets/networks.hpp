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

#include <torch/torch.h>

#include "layercomp/layout.hpp"
#include "layercomp/nets/config.hpp"
#include "layercomp/nets/spectral_norm.hpp"

namespace layercomp {

// ---- residual blocks -------------------------------------------------------

/// relu -> up2 -> conv3 -> relu -> conv3, plus a conv1 -> up2 shortcut.
class UpBlockImpl : public torch::nn::Module {
 public:
  UpBlockImpl(int64_t in, int64_t out);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  ConvLayer conv1_{nullptr}, conv2_{nullptr}, shortcut_{nullptr};
};
TORCH_MODULE(UpBlock);

/// [relu] -> conv3 -> relu -> conv3 -> avgpool2, plus an avgpool2 -> conv1
/// shortcut. The first block of a discriminator skips the leading relu.
class DownBlockImpl : public torch::nn::Module {
 public:
  DownBlockImpl(int64_t in, int64_t out, bool spectral, bool preactivate = true);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  ConvLayer conv1_{nullptr}, conv2_{nullptr}, shortcut_{nullptr};
  bool preactivate_;
};
TORCH_MODULE(DownBlock);

/// Same-resolution residual block.
class ResBlockImpl : public torch::nn::Module {
 public:
  explicit ResBlockImpl(int64_t channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  ConvLayer conv1_{nullptr}, conv2_{nullptr};
};
TORCH_MODULE(ResBlock);

/// Broadcasts (B, D) vectors to (B, D, h, w) maps.
torch::Tensor tile_vector(const torch::Tensor& v, int64_t h, int64_t w);

// ---- background generator ---------------------------------------------------

struct BackgroundOutput {
  torch::Tensor background;  // branch 1: z -> x0
  torch::Tensor scene;       // branch 2: (M_agg, branch-1 features) -> x0'
};

/// Two branches. Branch 1 decodes z into a background. Branch 2 encodes the
/// aggregated layout, joins it with branch 1's deepest (pre-upsampling)
/// features at the bottleneck and decodes a full scene. Outputs are tanh.
class BackgroundGeneratorImpl : public torch::nn::Module {
 public:
  explicit BackgroundGeneratorImpl(const NetConfig& config);

  BackgroundOutput forward(const torch::Tensor& z, const torch::Tensor& m_agg);
  /// Branch 1 only.
  torch::Tensor background(const torch::Tensor& z);
  /// Branch 2 only; branch 1 runs up to the shared features.
  torch::Tensor scene(const torch::Tensor& z, const torch::Tensor& m_agg);

  const NetConfig& config() const { return config_; }

 private:
  torch::Tensor seed_features(const torch::Tensor& z);
  torch::Tensor decode_background(torch::Tensor h);
  torch::Tensor decode_scene(const torch::Tensor& tap, const torch::Tensor& m_agg);

  NetConfig config_;
  LinearLayer fc_{nullptr};
  torch::nn::ModuleList bg_up_{nullptr};
  ConvLayer bg_out_{nullptr};
  ConvLayer layout_in_{nullptr};
  torch::nn::ModuleList layout_down_{nullptr};
  ConvLayer fuse_{nullptr};
  ResBlock fuse_block_{nullptr};
  torch::nn::ModuleList scene_up_{nullptr};
  ConvLayer scene_out_{nullptr};
};
TORCH_MODULE(BackgroundGenerator);

// ---- foreground generator ----------------------------------------------------

/// Inpainting encoder-decoder. Separate encoders for the masked scene and the
/// instance mask; noise joins at the encoder output and again inside the
/// decoder; scene-encoder features skip to the matching decoder level. The
/// last stage also sees the raw masked scene and mask.
class ForegroundGeneratorImpl : public torch::nn::Module {
 public:
  explicit ForegroundGeneratorImpl(const NetConfig& config);

  /// masked_scene: (B, 3, H, W) with the object's pixels already zeroed;
  /// mask: (B, N, H, W); z: (B, z_dim).
  torch::Tensor forward(const torch::Tensor& masked_scene, const torch::Tensor& mask,
                        const torch::Tensor& z);

  const NetConfig& config() const { return config_; }
  int decoder_noise_level() const { return noise_level_; }

 private:
  NetConfig config_;
  int noise_level_ = 0;
  ConvLayer scene_in_{nullptr}, mask_in_{nullptr};
  torch::nn::ModuleList scene_down_{nullptr}, mask_down_{nullptr};
  ConvLayer bottleneck_{nullptr};
  ResBlock bottleneck_block_{nullptr};
  torch::nn::ModuleList up_{nullptr};
  ConvLayer out1_{nullptr}, out2_{nullptr};
};
TORCH_MODULE(ForegroundGenerator);

// ---- mask generator -------------------------------------------------------------

/// Maps (class, box geometry, z) to a mask_crop_size^2 probability map in
/// box-normalized coordinates; `paste` resamples it into the box so every
/// probability outside the box is exactly zero.
class MaskGeneratorImpl : public torch::nn::Module {
 public:
  explicit MaskGeneratorImpl(const NetConfig& config);

  /// class_onehot: (B, N); box_geometry: (B, 4) normalized [r0, r1, c0, c1];
  /// returns (B, 1, S, S) probabilities.
  torch::Tensor forward(const torch::Tensor& class_onehot, const torch::Tensor& box_geometry,
                        const torch::Tensor& z);

  /// Full-frame probabilities (B, 1, H, W) for the given boxes.
  torch::Tensor full_frame(const torch::Tensor& class_onehot, const std::vector<BBox>& boxes,
                           const torch::Tensor& z);

  const NetConfig& config() const { return config_; }

 private:
  NetConfig config_;
  LinearLayer fc_{nullptr};
  torch::nn::ModuleList up_{nullptr};
  ConvLayer out_{nullptr};
  int levels_ = 0;
};
TORCH_MODULE(MaskGenerator);

torch::Tensor box_geometry(const std::vector<BBox>& boxes, int height, int width);

/// Places (B, C, S, S) crops into (B, C, H, W) frames, each resampled onto
/// its box with bilinear_roi (corner aligned); zero elsewhere.
torch::Tensor paste_into_boxes(const torch::Tensor& crops, const std::vector<BBox>& boxes,
                               int height, int width);

// ---- discriminators ---------------------------------------------------------------

struct DiscriminatorOutput {
  torch::Tensor score;                  // (B) logits
  std::vector<torch::Tensor> features;  // post-activation block outputs
};

/// Conditional ResNet discriminator; every conv / linear weight is
/// spectrally normalized. Conditioning maps are concatenated to the image
/// channels by the caller.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  DiscriminatorImpl(int64_t in_channels, const NetConfig& config, int blocks);
  DiscriminatorOutput forward(const torch::Tensor& x);

 private:
  torch::nn::ModuleList blocks_{nullptr};
  LinearLayer fc_{nullptr};
};
TORCH_MODULE(Discriminator);

Discriminator make_image_discriminator(const NetConfig& config);  // (3 + N) channels
Discriminator make_mask_discriminator(const NetConfig& config);   // (1 + N) channels

/// D(x, M_agg): channel concatenation of image and aggregated map.
DiscriminatorOutput disc_global_forward(Discriminator& d, const torch::Tensor& image,
                                        const torch::Tensor& m_agg);

/// D(I(x), I(M_agg)): both inputs cropped to `boxes` and rescaled to the
/// config's crop size before the conditioned discriminator.
DiscriminatorOutput disc_local_forward(Discriminator& d, const torch::Tensor& image,
                                       const torch::Tensor& m_agg, const std::vector<BBox>& boxes,
                                       int64_t crop_size);

}  // namespace layercomp
