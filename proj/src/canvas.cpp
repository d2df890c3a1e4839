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
#include "layercomp/canvas.hpp"

#include <cmath>

#include "layercomp/error.hpp"

namespace layercomp {

Canvas::Canvas(int height, int width, int channels, float fill)
    : height_(height), width_(width), channels_(channels) {
  require(height >= 0 && width >= 0 && channels >= 0, ErrorCode::kInvalidInput,
          "negative canvas dimensions");
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

Canvas::Canvas(int height, int width, int channels, std::vector<float> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  require(data_.size() == static_cast<std::size_t>(height) * width * channels,
          ErrorCode::kInvalidInput, "canvas data size does not match its shape");
}

bool Canvas::in_range() const {
  for (float v : data_) {
    if (!std::isfinite(v) || v < -1.0f || v > 1.0f) return false;
  }
  return true;
}

double mean_abs_diff(const Canvas& a, const Canvas& b) {
  require(a.same_shape(b), ErrorCode::kInvalidInput, "canvas shape mismatch");
  if (a.size() == 0) return 0.0;
  double acc = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) acc += std::abs(double(da[i]) - double(db[i]));
  return acc / static_cast<double>(da.size());
}

}  // namespace layercomp
