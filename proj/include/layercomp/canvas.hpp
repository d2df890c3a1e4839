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

#include <cstdint>
#include <span>
#include <vector>

namespace layercomp {

/// An H x W x C image with interleaved (HWC) float samples. Generated and
/// ingested images live in [-1, 1]; 8-bit values map as v / 127.5 - 1.
class Canvas {
 public:
  Canvas() = default;
  Canvas(int height, int width, int channels = 3, float fill = 0.0f);
  Canvas(int height, int width, int channels, std::vector<float> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& at(int row, int col, int ch) {
    return data_[(static_cast<std::size_t>(row) * width_ + col) * channels_ + ch];
  }
  float at(int row, int col, int ch) const {
    return data_[(static_cast<std::size_t>(row) * width_ + col) * channels_ + ch];
  }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  const std::vector<float>& values() const { return data_; }

  bool same_shape(const Canvas& other) const {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }

  /// True when every sample is finite and inside [-1, 1].
  bool in_range() const;

  friend bool operator==(const Canvas&, const Canvas&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

inline std::uint8_t to_byte(float v) {
  float s = (v + 1.0f) * 127.5f;
  if (!(s > 0.0f)) return 0;
  if (s >= 255.0f) return 255;
  return static_cast<std::uint8_t>(s + 0.5f);
}

inline float from_byte(std::uint8_t v) { return static_cast<float>(v) / 127.5f - 1.0f; }

double mean_abs_diff(const Canvas& a, const Canvas& b);

}  // namespace layercomp
