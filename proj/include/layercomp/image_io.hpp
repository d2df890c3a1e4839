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
#include <vector>

#include "layercomp/canvas.hpp"
#include "layercomp/layout.hpp"

namespace layercomp {

/// PNG bytes (8-bit RGB) for a 3-channel canvas in [-1, 1].
std::vector<std::uint8_t> encode_png(const Canvas& canvas);

/// Decodes PNG or JPEG bytes to a 3-channel canvas in [-1, 1].
Canvas decode_image(const std::vector<std::uint8_t>& bytes);

void save_png(const Canvas& canvas, const std::filesystem::path& path);
Canvas load_image(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_file(const std::filesystem::path& path, const std::string& text);

Canvas resize_bilinear(const Canvas& image, int height, int width);
OccupancyMap resize_nearest(const OccupancyMap& map, int height, int width);

/// Draws a layout with its palette colors over a neutral backdrop.
Canvas render_layout(const SemanticLayout& layout, const ClassPalette& palette);

/// Tiles equally sized canvases row-major with a `gap`-pixel separator.
Canvas make_grid(const std::vector<std::vector<Canvas>>& rows, int gap = 2);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace layercomp
