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

#include <torch/torch.h>

namespace layercomp {

/// Divides a matricized weight (out x rest) by a power-iteration estimate of
/// its largest singular value.
///
/// `u` (length out) is the persistent left singular vector estimate. When
/// `update` is set, `iterations` power steps run and `u` is overwritten in
/// place; otherwise the current `u` is used as is. The estimate is
/// sigma = u^T W v with u, v treated as constants, so gradients flow only
/// through W. A zero matrix yields zero (sigma is floored at `eps`).
torch::Tensor spectral_normalize(const torch::Tensor& weight, torch::Tensor& u,
                                 int iterations = 1, bool update = true, double eps = 1e-12);

/// The current sigma estimate for `weight` given `u` (no update).
double spectral_sigma_estimate(const torch::Tensor& weight, const torch::Tensor& u);

struct ConvLayerOptions {
  ConvLayerOptions(int64_t in, int64_t out, int64_t kernel) : in(in), out(out), kernel(kernel) {}
  int64_t in, out, kernel;
  int64_t stride = 1;
  int64_t padding = 0;
  bool spectral = false;
};

/// 2-D convolution whose weight optionally passes through spectral
/// normalization on every forward (one power step while training).
class ConvLayerImpl : public torch::nn::Module {
 public:
  explicit ConvLayerImpl(const ConvLayerOptions& options);
  torch::Tensor forward(const torch::Tensor& x);
  /// The weight actually used by forward (normalized when spectral).
  torch::Tensor effective_weight();
  bool spectral() const { return options_.spectral; }

  torch::Tensor weight, bias, u;

 private:
  ConvLayerOptions options_;
};
TORCH_MODULE(ConvLayer);

class LinearLayerImpl : public torch::nn::Module {
 public:
  LinearLayerImpl(int64_t in, int64_t out, bool spectral);
  torch::Tensor forward(const torch::Tensor& x);
  torch::Tensor effective_weight();
  bool spectral() const { return spectral_; }

  torch::Tensor weight, bias, u;

 private:
  bool spectral_;
};
TORCH_MODULE(LinearLayer);

}  // namespace layercomp
