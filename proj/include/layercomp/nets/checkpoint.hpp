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
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "layercomp/nets/config.hpp"

namespace layercomp {

// Checkpoint container layout (all integers little-endian):
//
//   bytes 0..7    magic "LCCKPT01"
//   bytes 8..15   uint64 manifest length L
//   next L bytes  JSON manifest
//   rest          float32 blob; tensor i occupies [offset_i, offset_i + 4 * numel_i)
//
// The manifest holds {format_version, kind, config, config_hash, step,
// tensors: [{name, shape, offset}], extra}.

using NamedTensors = std::vector<std::pair<std::string, torch::Tensor>>;

struct ModelCheckpoint {
  std::string kind;  // "background", "foreground", "mask", "classifier", ...
  NetConfig config;
  std::int64_t step = 0;
  nlohmann::json extra = nlohmann::json::object();
  NamedTensors tensors;

  const torch::Tensor& tensor(const std::string& name) const;
  bool has(const std::string& name) const;
  /// Hash of the whole archive payload, used to tag sessions and reports.
  std::string fingerprint() const;
};

void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_checkpoint(const ModelCheckpoint& ckpt);

/// Throws kVersion when the magic/format version or the config hash does not
/// match, and kCheckpoint when the blob disagrees with the manifest.
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);
ModelCheckpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

/// Parameters and buffers of `module` with names prefixed by `prefix`.
NamedTensors module_state(const torch::nn::Module& module, const std::string& prefix);

/// Copies tensors named `prefix` + name into `module`. The set of names and
/// every shape must match exactly (kCheckpoint otherwise).
void load_module_state(torch::nn::Module& module, const ModelCheckpoint& ckpt,
                       const std::string& prefix);

}  // namespace layercomp
