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

#include <string>

#include <nlohmann/json.hpp>

namespace layercomp {

/// Architecture hyper-parameters shared by every network in a model family.
/// Defaults are the 128 px configuration; `desk` scales them down.
struct NetConfig {
  int image_size = 128;
  int n_classes = 6;
  int z_dim = 128;
  int base_channels = 64;
  int n_blocks = 5;         // generator down/up residual blocks
  int d_blocks = 4;         // discriminator downsampling residual blocks
  int local_crop_size = 0;  // 0 means image_size
  int mask_crop_size = 32;  // working resolution of the mask generator
  int channel_cap = 8;      // widest level is base_channels * channel_cap

  int crop_size() const { return local_crop_size > 0 ? local_crop_size : image_size; }
  int bottom_size() const { return image_size >> n_blocks; }
  /// Channel width at generator level l (level 0 = full resolution).
  int channels(int level) const;
  /// Channel width of discriminator block l.
  int d_channels(int level) const;

  void validate() const;

  nlohmann::json to_json() const;
  static NetConfig from_json(const nlohmann::json& doc);
  /// Stable hash of the canonical JSON form.
  std::string hash() const;

  /// Small configuration for CPU-scale runs at 32 or 64 px.
  static NetConfig desk(int image_size, int n_classes);

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

}  // namespace layercomp
