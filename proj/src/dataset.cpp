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
#include "layercomp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

#include "layercomp/error.hpp"
#include "layercomp/image_io.hpp"
#include "layercomp/rle.hpp"

namespace layercomp {

namespace fs = std::filesystem;
using nlohmann::json;

DatasetIndex::DatasetIndex(ClassPalette palette, int image_size, fs::path root)
    : palette_(std::move(palette)), image_size_(image_size), root_(std::move(root)) {
  require(image_size > 0, ErrorCode::kInvalidInput, "image size must be positive");
}

void DatasetIndex::add(DatasetRecord record) {
  require(record.layout.height() == image_size_ && record.layout.width() == image_size_,
          ErrorCode::kInvalidInput, "layout size does not match dataset image size");
  require(record.layout.n_classes() == palette_.size(), ErrorCode::kInvalidInput,
          "layout class count does not match palette");
  if (record.image) {
    require(record.image->height() == image_size_ && record.image->width() == image_size_,
            ErrorCode::kInvalidInput, "image size does not match dataset image size");
  }
  records_.push_back(std::move(record));
}

Canvas DatasetIndex::image(int i) const {
  const auto& rec = records_.at(i);
  if (rec.image) return *rec.image;
  require(!rec.image_path.empty(), ErrorCode::kIo, "record has neither pixels nor a path");
  Canvas img = load_image(root_ / rec.image_path);
  require(img.height() == image_size_ && img.width() == image_size_, ErrorCode::kInvalidInput,
          "image " + rec.image_path + " does not match dataset size");
  return img;
}

void DatasetIndex::preload() {
  for (int i = 0; i < size(); ++i) {
    if (!records_[i].image) records_[i].image = image(i);
  }
}

// ---- layout files ---------------------------------------------------------

json palette_to_json(const ClassPalette& palette) {
  json colors = json::array();
  for (const auto& c : palette.colors()) colors.push_back({c[0], c[1], c[2]});
  return {{"names", palette.names()}, {"colors", colors}};
}

ClassPalette palette_from_json(const json& doc) {
  try {
    auto names = doc.at("names").get<std::vector<std::string>>();
    std::vector<Rgb> colors;
    if (doc.contains("colors")) {
      for (const auto& c : doc["colors"]) {
        colors.push_back({c.at(0).get<std::uint8_t>(), c.at(1).get<std::uint8_t>(),
                          c.at(2).get<std::uint8_t>()});
      }
    }
    return ClassPalette(std::move(names), std::move(colors));
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("palette: ") + e.what());
  }
}

json layout_to_json(const SemanticLayout& layout, const ClassPalette* palette) {
  json instances = json::array();
  for (const auto& inst : layout.instances()) {
    json item = {{"class_id", inst.class_id()}, {"mask_rle", rle_encode(inst.plane())}};
    if (!inst.empty()) {
      const BBox b = bbox_of(inst.plane());
      item["bbox"] = {b.row_min, b.row_max, b.col_min, b.col_max};
    }
    instances.push_back(std::move(item));
  }
  json doc = {{"height", layout.height()},
              {"width", layout.width()},
              {"n_classes", layout.n_classes()},
              {"instances", instances}};
  if (palette) doc["palette"] = palette->names();
  return doc;
}

SemanticLayout layout_from_json(const json& doc) {
  try {
    const int h = doc.at("height").get<int>();
    const int w = doc.at("width").get<int>();
    int n = 0;
    if (doc.contains("n_classes")) {
      n = doc["n_classes"].get<int>();
    } else {
      n = static_cast<int>(doc.at("palette").size());
    }
    SemanticLayout layout(h, w, n);
    for (const auto& item : doc.at("instances")) {
      OccupancyMap plane = rle_decode(item.at("mask_rle").get<std::string>(), h, w);
      layout.add(InstanceMask(std::move(plane), item.at("class_id").get<int>(), n));
    }
    return layout;
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("layout: ") + e.what());
  }
}

void save_layout(const SemanticLayout& layout, const ClassPalette& palette, const fs::path& path) {
  write_file(path, layout_to_json(layout, &palette).dump());
}

SemanticLayout load_layout(const fs::path& path) {
  const auto bytes = read_file(path);
  json doc = json::parse(bytes.begin(), bytes.end(), nullptr, false);
  require(!doc.is_discarded(), ErrorCode::kParse, "malformed layout file " + path.string());
  return layout_from_json(doc);
}

void save_dataset(const DatasetIndex& index, const fs::path& dir) {
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "layouts");
  json records = json::array();
  char name[32];
  for (int i = 0; i < index.size(); ++i) {
    std::snprintf(name, sizeof(name), "%06d", i);
    const std::string image_rel = std::string("images/") + name + ".png";
    const std::string layout_rel = std::string("layouts/") + name + ".json";
    save_png(index.image(i), dir / image_rel);
    save_layout(index.record(i).layout, index.palette(), dir / layout_rel);
    records.push_back({{"image", image_rel}, {"layout", layout_rel}});
  }
  json doc = {{"format", "layercomp-dataset"},
              {"version", 1},
              {"image_size", index.image_size()},
              {"palette", palette_to_json(index.palette())},
              {"records", records}};
  write_file(dir / "index.json", doc.dump(1));
}

DatasetIndex load_dataset(const fs::path& dir) {
  const auto bytes = read_file(dir / "index.json");
  json doc = json::parse(bytes.begin(), bytes.end(), nullptr, false);
  require(!doc.is_discarded(), ErrorCode::kParse, "malformed dataset index in " + dir.string());
  try {
    require(doc.value("format", "") == "layercomp-dataset", ErrorCode::kParse,
            "not a layercomp dataset: " + dir.string());
    DatasetIndex index(palette_from_json(doc.at("palette")), doc.at("image_size").get<int>(), dir);
    for (const auto& r : doc.at("records")) {
      DatasetRecord rec;
      rec.image_path = r.at("image").get<std::string>();
      rec.layout = load_layout(dir / r.at("layout").get<std::string>());
      index.add(std::move(rec));
    }
    return index;
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("dataset index: ") + e.what());
  }
}

// ---- COCO ingestion -------------------------------------------------------

OccupancyMap rasterize_polygon(const std::vector<double>& xy, int height, int width) {
  require(xy.size() >= 6 && xy.size() % 2 == 0, ErrorCode::kParse,
          "polygon needs at least three x,y pairs");
  OccupancyMap out(height, width);
  const std::size_t n = xy.size() / 2;
  std::vector<double> xs;
  for (int i = 0; i < height; ++i) {
    const double y = i + 0.5;
    xs.clear();
    for (std::size_t k = 0; k < n; ++k) {
      const double x0 = xy[2 * k], y0 = xy[2 * k + 1];
      const double x1 = xy[2 * ((k + 1) % n)], y1 = xy[2 * ((k + 1) % n) + 1];
      if ((y0 <= y && y < y1) || (y1 <= y && y < y0)) {
        xs.push_back(x0 + (y - y0) * (x1 - x0) / (y1 - y0));
      }
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      // Pixel centers j + 0.5 inside [xs[k], xs[k+1]).
      const int j0 = std::max(0, static_cast<int>(std::ceil(xs[k] - 0.5)));
      const int j1 = std::min(width - 1, static_cast<int>(std::ceil(xs[k + 1] - 0.5)) - 1);
      for (int j = j0; j <= j1; ++j) out.set(i, j);
    }
  }
  return out;
}

namespace {

OccupancyMap decode_segmentation(const json& seg, int height, int width) {
  if (seg.is_array()) {
    OccupancyMap out(height, width);
    for (const auto& poly : seg) {
      const auto part = rasterize_polygon(poly.get<std::vector<double>>(), height, width);
      for (int i = 0; i < height; ++i)
        for (int j = 0; j < width; ++j)
          if (part.at(i, j)) out.set(i, j);
    }
    return out;
  }
  const auto size = seg.at("size").get<std::vector<int>>();
  require(size.size() == 2 && size[0] == height && size[1] == width, ErrorCode::kParse,
          "RLE size does not match image size");
  const auto& counts = seg.at("counts");
  if (counts.is_string()) return rle_decode(counts.get<std::string>(), height, width);
  return rle_from_counts(counts.get<std::vector<std::uint32_t>>(), height, width);
}

}  // namespace

IngestResult ingest_coco(const fs::path& annotation_file, const fs::path& image_dir,
                         const std::vector<std::string>& class_filter, int size) {
  require(!class_filter.empty(), ErrorCode::kInvalidInput, "class filter must not be empty");
  require(size > 0, ErrorCode::kInvalidInput, "target size must be positive");
  const auto bytes = read_file(annotation_file);
  json doc = json::parse(bytes.begin(), bytes.end(), nullptr, false);
  require(!doc.is_discarded(), ErrorCode::kParse,
          "malformed annotation document " + annotation_file.string());

  IngestResult result;
  result.index = DatasetIndex(ClassPalette(class_filter), size);
  try {
    std::map<long long, int> category_to_class;
    for (const auto& cat : doc.at("categories")) {
      const int k = result.index.palette().index_of(cat.at("name").get<std::string>());
      if (k >= 0) category_to_class[cat.at("id").get<long long>()] = k;
    }
    struct ImageInfo {
      std::string file_name;
      int height = 0, width = 0;
      std::vector<const json*> annotations;
    };
    std::map<long long, ImageInfo> images;
    for (const auto& img : doc.at("images")) {
      images[img.at("id").get<long long>()] = {img.at("file_name").get<std::string>(),
                                               img.at("height").get<int>(),
                                               img.at("width").get<int>(),
                                               {}};
    }
    for (const auto& ann : doc.at("annotations")) {
      if (ann.value("iscrowd", 0) != 0) continue;
      if (!category_to_class.count(ann.at("category_id").get<long long>())) continue;
      auto it = images.find(ann.at("image_id").get<long long>());
      require(it != images.end(), ErrorCode::kParse, "annotation refers to an unknown image");
      it->second.annotations.push_back(&ann);
    }
    const int n_classes = result.index.palette().size();
    for (auto& [id, info] : images) {
      if (info.annotations.empty()) continue;
      const fs::path path = image_dir / info.file_name;
      if (!fs::exists(path)) {
        ++result.missing_images;
        continue;
      }
      SemanticLayout layout(size, size, n_classes);
      for (const json* ann : info.annotations) {
        const int cls = category_to_class.at((*ann).at("category_id").get<long long>());
        OccupancyMap full = decode_segmentation((*ann).at("segmentation"), info.height, info.width);
        OccupancyMap small = resize_nearest(full, size, size);
        if (!small.any()) {
          ++result.dropped_instances;
          continue;
        }
        layout.add(InstanceMask(std::move(small), cls, n_classes));
      }
      if (layout.empty()) continue;
      Canvas img = load_image(path);
      DatasetRecord rec;
      rec.image_path = info.file_name;
      rec.image = resize_bilinear(img, size, size);
      rec.layout = std::move(layout);
      result.index.add(std::move(rec));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("annotation document: ") + e.what());
  }
  return result;
}

// ---- synthetic shapes -----------------------------------------------------

namespace {

struct NamedColor {
  const char* name;
  Rgb color;
};

constexpr NamedColor kSynthClasses[kSynthPaletteCapacity] = {
    {"red_circle", {220, 40, 40}},      {"green_triangle", {40, 190, 60}},
    {"blue_box", {40, 70, 220}},        {"yellow_circle", {230, 210, 40}},
    {"magenta_triangle", {200, 50, 200}}, {"cyan_box", {40, 200, 210}},
};

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

ClassPalette synth_palette(int n_classes) {
  require(n_classes >= 1 && n_classes <= kSynthPaletteCapacity, ErrorCode::kConfig,
          "synthetic palette supports 1.." + std::to_string(kSynthPaletteCapacity) + " classes");
  std::vector<std::string> names;
  std::vector<Rgb> colors;
  for (int c = 0; c < n_classes; ++c) {
    names.emplace_back(kSynthClasses[c].name);
    colors.push_back(kSynthClasses[c].color);
  }
  return ClassPalette(std::move(names), std::move(colors));
}

ShapeKind synth_shape_for_class(int class_id) {
  switch (class_id % 3) {
    case 0: return ShapeKind::kCircle;
    case 1: return ShapeKind::kTriangle;
    default: return ShapeKind::kRotatedRect;
  }
}

bool shape_contains(const ShapeSpec& s, int row, int col) {
  const double x = col + 0.5 - s.cx;
  const double y = row + 0.5 - s.cy;
  const double a = s.angle_deg * std::numbers::pi / 180.0;
  switch (s.kind) {
    case ShapeKind::kCircle:
      return x * x + y * y <= s.extent * s.extent;
    case ShapeKind::kRotatedRect: {
      const double u = std::cos(a) * x + std::sin(a) * y;
      const double v = -std::sin(a) * x + std::cos(a) * y;
      return std::abs(u) <= s.extent && std::abs(v) <= s.extent * s.aspect;
    }
    case ShapeKind::kTriangle: {
      double vx[3], vy[3];
      for (int k = 0; k < 3; ++k) {
        const double t = a + k * 2.0 * std::numbers::pi / 3.0;
        vx[k] = s.extent * std::cos(t);
        vy[k] = s.extent * std::sin(t);
      }
      // Same-side test against each directed edge.
      bool pos = false, neg = false;
      for (int k = 0; k < 3; ++k) {
        const int m = (k + 1) % 3;
        const double cross = (vx[m] - vx[k]) * (y - vy[k]) - (vy[m] - vy[k]) * (x - vx[k]);
        if (cross > 0) pos = true;
        if (cross < 0) neg = true;
      }
      return !(pos && neg);
    }
  }
  return false;
}

SynthScene synth_scene(std::uint64_t seed, int size, int n_classes) {
  const ClassPalette palette = synth_palette(n_classes);
  require(size >= 16, ErrorCode::kConfig, "synthetic scenes need size >= 16");
  Rng rng(seed);
  SynthScene scene{Canvas(size, size, 3), SemanticLayout(size, size, n_classes), {}};

  // Background: two light desaturated tones blended along a random direction.
  double tone[2][3];
  for (auto& t : tone) {
    const double gray = rng.uniform(0.5, 0.85);
    for (double& ch : t) ch = clamp01(gray + rng.uniform(-0.08, 0.08));
  }
  const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double dx = std::cos(dir), dy = std::sin(dir);
  const double half = 0.5 * size * (std::abs(dx) + std::abs(dy));
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const double proj = ((j + 0.5 - size / 2.0) * dx + (i + 0.5 - size / 2.0) * dy) / half;
      const double w = clamp01(0.5 + 0.5 * proj);
      for (int c = 0; c < 3; ++c) {
        const double v = (1 - w) * tone[0][c] + w * tone[1][c] + 0.01 * rng.normal();
        scene.image.at(i, j, c) = static_cast<float>(2.0 * clamp01(v) - 1.0);
      }
    }
  }

  const int n_objects = 1 + static_cast<int>(rng.below(3));
  OccupancyMap taken(size, size);
  for (int t = 0; t < n_objects; ++t) {
    ShapeSpec best;
    OccupancyMap best_plane(size, size);
    for (int attempt = 0; attempt < 30; ++attempt) {
      ShapeSpec s;
      s.class_id = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_classes)));
      s.kind = synth_shape_for_class(s.class_id);
      double reach = 0.0;
      switch (s.kind) {
        case ShapeKind::kCircle:
          s.extent = rng.uniform(0.10, 0.20) * size;
          reach = s.extent;
          break;
        case ShapeKind::kTriangle:
          s.extent = rng.uniform(0.14, 0.24) * size;
          s.angle_deg = rng.uniform(0.0, 360.0);
          reach = s.extent;
          break;
        case ShapeKind::kRotatedRect:
          s.extent = rng.uniform(0.10, 0.18) * size;
          s.aspect = rng.uniform(0.6, 1.0);
          // Keep away from axis alignment so the box is never filled solid.
          s.angle_deg = rng.uniform(20.0, 70.0);
          reach = s.extent * std::sqrt(1.0 + s.aspect * s.aspect);
          break;
      }
      s.cx = rng.uniform(reach + 1.0, size - reach - 1.0);
      s.cy = rng.uniform(reach + 1.0, size - reach - 1.0);
      OccupancyMap plane(size, size);
      bool overlaps = false;
      for (int i = 0; i < size; ++i) {
        for (int j = 0; j < size; ++j) {
          if (!shape_contains(s, i, j)) continue;
          plane.set(i, j);
          overlaps = overlaps || taken.at(i, j);
        }
      }
      best = s;
      best_plane = std::move(plane);
      if (!overlaps) break;
    }
    if (!best_plane.any()) continue;
    const Rgb color = palette.color(best.class_id);
    for (int i = 0; i < size; ++i) {
      for (int j = 0; j < size; ++j) {
        if (!best_plane.at(i, j)) continue;
        taken.set(i, j);
        for (int c = 0; c < 3; ++c) {
          const double v = color[c] / 255.0 + 0.03 * rng.normal();
          scene.image.at(i, j, c) = static_cast<float>(2.0 * clamp01(v) - 1.0);
        }
      }
    }
    scene.layout.add(InstanceMask(std::move(best_plane), best.class_id, n_classes));
    scene.shapes.push_back(best);
  }
  return scene;
}

DatasetIndex synth_dataset(int n_images, int size, int n_classes, std::uint64_t seed) {
  require(n_images >= 0, ErrorCode::kInvalidInput, "n_images must be non-negative");
  DatasetIndex index(synth_palette(n_classes), size);
  for (int i = 0; i < n_images; ++i) {
    SynthScene scene = synth_scene(derive_seed(seed, static_cast<std::uint64_t>(i)), size, n_classes);
    DatasetRecord rec;
    rec.layout = std::move(scene.layout);
    rec.image = std::move(scene.image);
    index.add(std::move(rec));
  }
  return index;
}

// ---- sampling --------------------------------------------------------------

std::vector<TrainingSample> sample_fg_batch(const DatasetIndex& index, int batch, Rng& rng) {
  require(batch >= 0, ErrorCode::kInvalidInput, "batch must be non-negative");
  std::vector<int> usable;
  for (int i = 0; i < index.size(); ++i)
    if (!index.record(i).layout.empty()) usable.push_back(i);
  require(!usable.empty() || batch == 0, ErrorCode::kInvalidInput,
          "dataset has no image with foreground instances");
  std::vector<TrainingSample> out;
  out.reserve(static_cast<std::size_t>(batch));
  for (int b = 0; b < batch; ++b) {
    const int r = usable[rng.below(usable.size())];
    const auto& layout = index.record(r).layout;
    TrainingSample s;
    s.record = r;
    s.picked_index = static_cast<int>(rng.below(static_cast<std::uint64_t>(layout.size())));
    s.layout = layout;
    s.image = index.image(r);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace layercomp
