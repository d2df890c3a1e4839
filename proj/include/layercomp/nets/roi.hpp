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

namespace layercomp {

/// Crops `boxes[b]` out of `input[b]` and resamples it to out_h x out_w.
///
/// Sample k along an axis sits at min + k * (max - min) / (out - 1), so the
/// first and last samples land exactly on the box's corner pixels; a single
/// output row/column samples the box center. Values are bilinear in the four
/// neighbouring pixels. Differentiable w.r.t. `input` (the box is discrete).
///
/// input: (B, C, H, W) float; boxes: B inclusive pixel boxes.
torch::Tensor bilinear_roi(const torch::Tensor& input, const std::vector<BBox>& boxes,
                           int64_t out_h, int64_t out_w);

}  // namespace layercomp
