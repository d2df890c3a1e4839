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
#include "layercomp/nets/tensors.hpp"

#include "layercomp/error.hpp"

namespace layercomp {

torch::Tensor to_tensor(const Canvas& canvas) {
  auto hwc = torch::from_blob(const_cast<float*>(canvas.data().data()),
                              {canvas.height(), canvas.width(), canvas.channels()},
                              torch::kFloat32);
  return hwc.permute({2, 0, 1}).contiguous();
}

torch::Tensor to_tensor(const AggregatedMap& map) {
  auto hwc = torch::from_blob(const_cast<std::uint8_t*>(map.data().data()),
                              {map.height(), map.width(), map.n_classes()}, torch::kUInt8);
  return hwc.permute({2, 0, 1}).to(torch::kFloat32).contiguous();
}

torch::Tensor to_tensor(const InstanceMask& mask) {
  auto out = torch::zeros({mask.n_classes(), mask.height(), mask.width()});
  out[mask.class_id()] = to_tensor(mask.plane())[0];
  return out;
}

torch::Tensor to_tensor(const OccupancyMap& map) {
  auto hw = torch::from_blob(const_cast<std::uint8_t*>(map.data().data()),
                             {1, map.height(), map.width()}, torch::kUInt8);
  return hw.to(torch::kFloat32).contiguous();
}

torch::Tensor stack_canvases(const std::vector<Canvas>& canvases) {
  std::vector<torch::Tensor> parts;
  parts.reserve(canvases.size());
  for (const auto& c : canvases) parts.push_back(to_tensor(c));
  return torch::stack(parts);
}

Canvas to_canvas(const torch::Tensor& t) {
  auto chw = t.dim() == 4 ? t.squeeze(0) : t;
  require(chw.dim() == 3, ErrorCode::kInvalidInput, "expected a (C, H, W) tensor");
  auto hwc = chw.detach().to(torch::kCPU, torch::kFloat32).permute({1, 2, 0}).contiguous();
  const int h = static_cast<int>(hwc.size(0));
  const int w = static_cast<int>(hwc.size(1));
  const int c = static_cast<int>(hwc.size(2));
  std::vector<float> data(hwc.data_ptr<float>(), hwc.data_ptr<float>() + hwc.numel());
  return Canvas(h, w, c, std::move(data));
}

torch::Tensor noise_batch(const std::vector<std::vector<float>>& zs) {
  require(!zs.empty(), ErrorCode::kInvalidInput, "empty noise batch");
  const auto dim = static_cast<std::int64_t>(zs.front().size());
  auto out = torch::empty({static_cast<std::int64_t>(zs.size()), dim});
  for (std::size_t b = 0; b < zs.size(); ++b) {
    require(static_cast<std::int64_t>(zs[b].size()) == dim, ErrorCode::kInvalidInput,
            "noise vectors differ in length");
    std::copy(zs[b].begin(), zs[b].end(), out[static_cast<std::int64_t>(b)].data_ptr<float>());
  }
  return out;
}

}  // namespace layercomp
