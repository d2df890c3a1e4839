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
#include "layercomp/nets/config.hpp"

#include <algorithm>

#include "layercomp/error.hpp"
#include "layercomp/rng.hpp"

namespace layercomp {

int NetConfig::channels(int level) const {
  return base_channels * std::min(1 << std::min(level, 30), channel_cap);
}

int NetConfig::d_channels(int level) const {
  return base_channels * std::min(1 << std::min(level, 30), channel_cap);
}

void NetConfig::validate() const {
  require(image_size > 0 && n_classes >= 1 && z_dim >= 1 && base_channels >= 1,
          ErrorCode::kConfig, "network sizes must be positive");
  require(n_blocks >= 1 && d_blocks >= 1, ErrorCode::kConfig, "need at least one block");
  require(channel_cap >= 1, ErrorCode::kConfig, "channel_cap must be positive");
  const auto pow2 = [](int v) { return v > 0 && (v & (v - 1)) == 0; };
  require(pow2(image_size), ErrorCode::kConfig, "image_size must be a power of two");
  require((image_size >> n_blocks) >= 1 && (image_size >> n_blocks) << n_blocks == image_size,
          ErrorCode::kConfig, "image_size must be a multiple of 2^n_blocks");
  require((crop_size() >> d_blocks) >= 1 && (image_size >> d_blocks) >= 1, ErrorCode::kConfig,
          "too many discriminator blocks for the image size");
  require(pow2(crop_size()), ErrorCode::kConfig, "local_crop_size must be a power of two");
  require(pow2(mask_crop_size) && mask_crop_size >= 8, ErrorCode::kConfig,
          "mask_crop_size must be a power of two >= 8");
}

nlohmann::json NetConfig::to_json() const {
  return {{"image_size", image_size},         {"n_classes", n_classes},
          {"z_dim", z_dim},                   {"base_channels", base_channels},
          {"n_blocks", n_blocks},             {"d_blocks", d_blocks},
          {"local_crop_size", local_crop_size}, {"mask_crop_size", mask_crop_size},
          {"channel_cap", channel_cap}};
}

NetConfig NetConfig::from_json(const nlohmann::json& doc) {
  NetConfig c;
  c.image_size = doc.value("image_size", c.image_size);
  c.n_classes = doc.value("n_classes", c.n_classes);
  c.z_dim = doc.value("z_dim", c.z_dim);
  c.base_channels = doc.value("base_channels", c.base_channels);
  c.n_blocks = doc.value("n_blocks", c.n_blocks);
  c.d_blocks = doc.value("d_blocks", c.d_blocks);
  c.local_crop_size = doc.value("local_crop_size", c.local_crop_size);
  c.mask_crop_size = doc.value("mask_crop_size", c.mask_crop_size);
  c.channel_cap = doc.value("channel_cap", c.channel_cap);
  c.validate();
  return c;
}

std::string NetConfig::hash() const { return hex64(fnv1a64(to_json().dump())); }

NetConfig NetConfig::desk(int image_size, int n_classes) {
  NetConfig c;
  c.image_size = image_size;
  c.n_classes = n_classes;
  c.z_dim = 32;
  c.base_channels = 8;
  c.channel_cap = 4;
  int levels = 0;
  while ((image_size >> (levels + 1)) >= 4) ++levels;
  c.n_blocks = levels;
  c.d_blocks = std::min(4, levels);
  c.mask_crop_size = std::min(32, image_size);
  c.validate();
  return c;
}

}  // namespace layercomp
