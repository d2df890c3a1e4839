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

#include "layercomp/canvas.hpp"
#include "layercomp/layout.hpp"

namespace layercomp {

// Conversions between the value types and NCHW float tensors.

torch::Tensor to_tensor(const Canvas& canvas);                 // (C, H, W)
torch::Tensor to_tensor(const AggregatedMap& map);             // (N, H, W)
torch::Tensor to_tensor(const InstanceMask& mask);             // (N, H, W)
torch::Tensor to_tensor(const OccupancyMap& map);              // (1, H, W)
torch::Tensor stack_canvases(const std::vector<Canvas>& canvases);  // (B, C, H, W)

Canvas to_canvas(const torch::Tensor& chw);  // (C, H, W) or (1, C, H, W)

/// (B, z_dim) tensor from seed-expanded noise vectors.
torch::Tensor noise_batch(const std::vector<std::vector<float>>& zs);

}  // namespace layercomp
