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
#include "layercomp/nets/spectral_norm.hpp"

#include <cmath>

#include "layercomp/error.hpp"

namespace layercomp {
namespace {

torch::Tensor normalized(const torch::Tensor& x, double eps) {
  return x / x.norm().clamp_min(eps);
}

}  // namespace

torch::Tensor spectral_normalize(const torch::Tensor& weight, torch::Tensor& u, int iterations,
                                 bool update, double eps) {
  require(weight.dim() == 2, ErrorCode::kInvalidInput, "spectral_normalize expects a 2-D weight");
  require(u.dim() == 1 && u.size(0) == weight.size(0), ErrorCode::kInvalidInput,
          "power-iteration vector must match the weight's row count");
  torch::Tensor u_hat, v_hat;
  {
    torch::NoGradGuard no_grad;
    const auto w = weight.detach();
    u_hat = u.clone();
    v_hat = normalized(torch::mv(w.t(), u_hat), eps);
    if (update) {
      for (int k = 0; k < iterations; ++k) {
        if (k > 0) v_hat = normalized(torch::mv(w.t(), u_hat), eps);
        u_hat = normalized(torch::mv(w, v_hat), eps);
      }
      u.copy_(u_hat);
    }
  }
  const auto sigma = torch::dot(u_hat, torch::mv(weight, v_hat));
  return weight / sigma.clamp_min(eps);
}

double spectral_sigma_estimate(const torch::Tensor& weight, const torch::Tensor& u) {
  torch::NoGradGuard no_grad;
  const auto v = normalized(torch::mv(weight.t(), u), 1e-12);
  return torch::dot(u, torch::mv(weight, v)).item<double>();
}

ConvLayerImpl::ConvLayerImpl(const ConvLayerOptions& options) : options_(options) {
  const double fan_in = static_cast<double>(options.in * options.kernel * options.kernel);
  // Uniform with variance 1 / fan_in.
  const double bound = std::sqrt(3.0 / fan_in);
  weight = register_parameter(
      "weight", torch::empty({options.out, options.in, options.kernel, options.kernel})
                    .uniform_(-bound, bound));
  bias = register_parameter("bias", torch::zeros({options.out}));
  if (options.spectral) {
    u = register_buffer("u", normalized(torch::randn({options.out}), 1e-12));
  }
}

torch::Tensor ConvLayerImpl::effective_weight() {
  if (!options_.spectral) return weight;
  auto w2d = weight.view({options_.out, -1});
  return spectral_normalize(w2d, u, 1, is_training()).view_as(weight);
}

torch::Tensor ConvLayerImpl::forward(const torch::Tensor& x) {
  return torch::conv2d(x, effective_weight(), bias, options_.stride, options_.padding);
}

LinearLayerImpl::LinearLayerImpl(int64_t in, int64_t out, bool spectral) : spectral_(spectral) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight = register_parameter("weight", torch::empty({out, in}).uniform_(-bound, bound));
  bias = register_parameter("bias", torch::zeros({out}));
  if (spectral) u = register_buffer("u", normalized(torch::randn({out}), 1e-12));
}

torch::Tensor LinearLayerImpl::effective_weight() {
  if (!spectral_) return weight;
  return spectral_normalize(weight, u, 1, is_training());
}

torch::Tensor LinearLayerImpl::forward(const torch::Tensor& x) {
  return torch::linear(x, effective_weight(), bias);
}

}  // namespace layercomp
