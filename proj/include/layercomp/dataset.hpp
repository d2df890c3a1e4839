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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layercomp/canvas.hpp"
#include "layercomp/layout.hpp"
#include "layercomp/rng.hpp"

namespace layercomp {

struct DatasetRecord {
  std::string image_path;  // relative to the dataset root; may be empty for in-memory sets
  SemanticLayout layout;
  std::optional<Canvas> image;  // cached pixels, [-1, 1]
};

/// Images plus their layouts. Immutable once built; loaders sample from it
/// with their own Rng.
class DatasetIndex {
 public:
  DatasetIndex() = default;
  DatasetIndex(ClassPalette palette, int image_size, std::filesystem::path root = {});

  const ClassPalette& palette() const { return palette_; }
  int image_size() const { return image_size_; }
  const std::filesystem::path& root() const { return root_; }
  int size() const { return static_cast<int>(records_.size()); }
  bool empty() const { return records_.empty(); }
  const DatasetRecord& record(int i) const { return records_.at(i); }
  const std::vector<DatasetRecord>& records() const { return records_; }

  void add(DatasetRecord record);

  /// Returns the cached image or reads it from disk.
  Canvas image(int i) const;

  /// Reads every image into the cache.
  void preload();

 private:
  ClassPalette palette_;
  int image_size_ = 0;
  std::filesystem::path root_;
  std::vector<DatasetRecord> records_;
};

struct TrainingSample {
  Canvas image;
  SemanticLayout layout;
  int record = 0;
  int picked_index = 0;
};

// ---- layout files -------------------------------------------------------

nlohmann::json layout_to_json(const SemanticLayout& layout, const ClassPalette* palette = nullptr);
SemanticLayout layout_from_json(const nlohmann::json& doc);
void save_layout(const SemanticLayout& layout, const ClassPalette& palette,
                 const std::filesystem::path& path);
SemanticLayout load_layout(const std::filesystem::path& path);

nlohmann::json palette_to_json(const ClassPalette& palette);
ClassPalette palette_from_json(const nlohmann::json& doc);

/// Writes index.json, images/NNNNNN.png and layouts/NNNNNN.json under `dir`.
void save_dataset(const DatasetIndex& index, const std::filesystem::path& dir);
DatasetIndex load_dataset(const std::filesystem::path& dir);

// ---- ingestion ---------------------------------------------------------

struct IngestResult {
  DatasetIndex index;
  int missing_images = 0;
  int dropped_instances = 0;  // instances that vanished after resizing
};

/// Reads a COCO-format annotation document, keeps images holding at least
/// one instance of `class_filter`, rasterizes polygons / RLE and resizes to
/// size x size (bilinear image, nearest-neighbour masks). Crowd annotations
/// are skipped.
IngestResult ingest_coco(const std::filesystem::path& annotation_file,
                         const std::filesystem::path& image_dir,
                         const std::vector<std::string>& class_filter, int size);

/// Scanline rasterization of a polygon given as x0,y0,x1,y1,... (pixel
/// coordinates, COCO convention) with even-odd filling at pixel centers.
OccupancyMap rasterize_polygon(const std::vector<double>& xy, int height, int width);

// ---- synthetic shapes ------------------------------------------------------

constexpr int kSynthPaletteCapacity = 6;

enum class ShapeKind { kCircle, kTriangle, kRotatedRect };

struct ShapeSpec {
  ShapeKind kind = ShapeKind::kCircle;
  int class_id = 0;
  double cx = 0.0, cy = 0.0;     // center, pixels
  double extent = 0.0;           // radius / circumradius / half-length
  double aspect = 1.0;           // rect half-width = extent * aspect
  double angle_deg = 0.0;        // orientation
};

ClassPalette synth_palette(int n_classes);
ShapeKind synth_shape_for_class(int class_id);

/// Whether the pixel center (row + 0.5, col + 0.5) lies inside the shape.
bool shape_contains(const ShapeSpec& shape, int row, int col);

struct SynthScene {
  Canvas image;
  SemanticLayout layout;
  std::vector<ShapeSpec> shapes;
};

/// One scene: a smooth two-tone gradient background plus 1..3 shapes, each
/// filled with its class's canonical color and mild noise.
SynthScene synth_scene(std::uint64_t seed, int size, int n_classes);

/// n_images scenes; scene i uses derive_seed(seed, i).
DatasetIndex synth_dataset(int n_images, int size, int n_classes, std::uint64_t seed);

// ---- sampling --------------------------------------------------------------

/// Draws `batch` images uniformly (with replacement) and one instance of
/// each uniformly. Images without instances are never picked.
std::vector<TrainingSample> sample_fg_batch(const DatasetIndex& index, int batch, Rng& rng);

}  // namespace layercomp
