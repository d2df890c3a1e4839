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
#include <string>
#include <vector>

#include "layercomp/layout.hpp"

namespace layercomp {

// Run-length encoding compatible with the COCO mask API: runs are counted in
// column-major order and alternate starting with a run of zeros. The string
// form packs the counts (delta-coded after the second) into 5-bit groups
// offset by '0'.

std::vector<std::uint32_t> rle_counts(const OccupancyMap& map);
OccupancyMap rle_from_counts(const std::vector<std::uint32_t>& counts, int height, int width);

std::string rle_encode(const OccupancyMap& map);
OccupancyMap rle_decode(const std::string& rle, int height, int width);

}  // namespace layercomp
