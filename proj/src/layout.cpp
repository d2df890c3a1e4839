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
#include "layercomp/layout.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "layercomp/error.hpp"

namespace layercomp {

ClassPalette::ClassPalette(std::vector<std::string> names, std::vector<Rgb> colors)
    : names_(std::move(names)), colors_(std::move(colors)) {
  require(!names_.empty(), ErrorCode::kInvalidInput, "palette needs at least one class");
  std::set<std::string> seen(names_.begin(), names_.end());
  require(seen.size() == names_.size(), ErrorCode::kInvalidInput,
          "palette class names must be unique");
  if (colors_.empty()) {
    // Evenly spaced hues for display when no colors are given.
    for (std::size_t i = 0; i < names_.size(); ++i) {
      const double h = 6.0 * static_cast<double>(i) / static_cast<double>(names_.size());
      const double x = 1.0 - std::abs(std::fmod(h, 2.0) - 1.0);
      double r = 0, g = 0, b = 0;
      switch (static_cast<int>(h)) {
        case 0: r = 1; g = x; break;
        case 1: r = x; g = 1; break;
        case 2: g = 1; b = x; break;
        case 3: g = x; b = 1; break;
        case 4: r = x; b = 1; break;
        default: r = 1; b = x; break;
      }
      colors_.push_back({static_cast<std::uint8_t>(r * 255), static_cast<std::uint8_t>(g * 255),
                         static_cast<std::uint8_t>(b * 255)});
    }
  }
  require(colors_.size() == names_.size(), ErrorCode::kInvalidInput,
          "palette colors must match class names");
}

int ClassPalette::index_of(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  return it == names_.end() ? -1 : static_cast<int>(it - names_.begin());
}

OccupancyMap::OccupancyMap(int height, int width, std::uint8_t fill)
    : height_(height), width_(width) {
  require(height > 0 && width > 0, ErrorCode::kInvalidInput, "map dimensions must be positive");
  data_.assign(static_cast<std::size_t>(height) * width, fill ? 1 : 0);
}

OccupancyMap::OccupancyMap(int height, int width, std::vector<std::uint8_t> data)
    : height_(height), width_(width), data_(std::move(data)) {
  require(height > 0 && width > 0, ErrorCode::kInvalidInput, "map dimensions must be positive");
  require(data_.size() == static_cast<std::size_t>(height) * width, ErrorCode::kInvalidInput,
          "occupancy data size does not match its shape");
  for (auto& v : data_) require(v <= 1, ErrorCode::kInvalidInput, "occupancy values must be 0/1");
}

std::size_t OccupancyMap::count() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

bool OccupancyMap::any() const {
  return std::any_of(data_.begin(), data_.end(), [](std::uint8_t v) { return v != 0; });
}

AggregatedMap::AggregatedMap(int height, int width, int n_classes)
    : height_(height), width_(width), n_classes_(n_classes) {
  require(height > 0 && width > 0 && n_classes > 0, ErrorCode::kInvalidInput,
          "map dimensions must be positive");
  data_.assign(static_cast<std::size_t>(height) * width * n_classes, 0);
}

AggregatedMap::AggregatedMap(int height, int width, int n_classes, std::vector<std::uint8_t> data)
    : height_(height), width_(width), n_classes_(n_classes), data_(std::move(data)) {
  require(height > 0 && width > 0 && n_classes > 0, ErrorCode::kInvalidInput,
          "map dimensions must be positive");
  require(data_.size() == static_cast<std::size_t>(height) * width * n_classes,
          ErrorCode::kInvalidInput, "volume data size does not match its shape");
  for (auto& v : data_) require(v <= 1, ErrorCode::kInvalidInput, "mask values must be 0/1");
}

InstanceMask::InstanceMask(OccupancyMap plane, int class_id, int n_classes)
    : plane_(std::move(plane)), class_id_(class_id), n_classes_(n_classes) {
  require(n_classes >= 1, ErrorCode::kInvalidInput, "n_classes must be >= 1");
  require(class_id >= 0 && class_id < n_classes, ErrorCode::kInvalidInput,
          "class_id " + std::to_string(class_id) + " outside [0, " + std::to_string(n_classes) + ")");
}

InstanceMask InstanceMask::from_dense(const AggregatedMap& dense, int class_id) {
  require(class_id >= 0 && class_id < dense.n_classes(), ErrorCode::kInvalidInput,
          "class_id outside palette");
  OccupancyMap plane(dense.height(), dense.width());
  for (int i = 0; i < dense.height(); ++i) {
    for (int j = 0; j < dense.width(); ++j) {
      for (int n = 0; n < dense.n_classes(); ++n) {
        if (!dense.at(i, j, n)) continue;
        require(n == class_id, ErrorCode::kInvalidInput,
                "instance mask has nonzero entries outside its class channel");
        plane.set(i, j);
      }
    }
  }
  return InstanceMask(std::move(plane), class_id, dense.n_classes());
}

AggregatedMap InstanceMask::to_dense() const {
  AggregatedMap out(height(), width(), n_classes_);
  for (int i = 0; i < height(); ++i)
    for (int j = 0; j < width(); ++j)
      if (plane_.at(i, j)) out.set(i, j, class_id_);
  return out;
}

SemanticLayout::SemanticLayout(int height, int width, int n_classes)
    : height_(height), width_(width), n_classes_(n_classes) {
  require(height > 0 && width > 0 && n_classes > 0, ErrorCode::kInvalidInput,
          "layout dimensions must be positive");
}

void SemanticLayout::add(InstanceMask mask) {
  require(mask.height() == height_ && mask.width() == width_ && mask.n_classes() == n_classes_,
          ErrorCode::kInvalidInput, "instance shape does not match layout");
  instances_.push_back(std::move(mask));
}

OccupancyMap occupancy_of(const InstanceMask& mask) { return mask.plane(); }

AggregatedMap aggregate(const SemanticLayout& layout) {
  require(!layout.empty(), ErrorCode::kEmptyLayout, "cannot aggregate an empty layout");
  AggregatedMap out(layout.height(), layout.width(), layout.n_classes());
  for (const auto& inst : layout.instances()) {
    const auto& plane = inst.plane();
    for (int i = 0; i < layout.height(); ++i)
      for (int j = 0; j < layout.width(); ++j)
        if (plane.at(i, j)) out.set(i, j, inst.class_id());
  }
  return out;
}

OccupancyMap aggregate_occupancy(const AggregatedMap& agg) {
  OccupancyMap out(agg.height(), agg.width());
  for (int i = 0; i < agg.height(); ++i) {
    for (int j = 0; j < agg.width(); ++j) {
      for (int n = 0; n < agg.n_classes(); ++n) {
        if (agg.at(i, j, n)) {
          out.set(i, j);
          break;
        }
      }
    }
  }
  return out;
}

BBox bbox_of(const OccupancyMap& occ, int padding) {
  require(padding >= 0, ErrorCode::kInvalidInput, "padding must be non-negative");
  BBox box{occ.height(), -1, occ.width(), -1};
  for (int i = 0; i < occ.height(); ++i) {
    for (int j = 0; j < occ.width(); ++j) {
      if (!occ.at(i, j)) continue;
      box.row_min = std::min(box.row_min, i);
      box.row_max = std::max(box.row_max, i);
      box.col_min = std::min(box.col_min, j);
      box.col_max = std::max(box.col_max, j);
    }
  }
  require(box.row_max >= 0, ErrorCode::kEmptyMask, "bounding box of an all-zero map");
  box.row_min = std::max(0, box.row_min - padding);
  box.col_min = std::max(0, box.col_min - padding);
  box.row_max = std::min(occ.height() - 1, box.row_max + padding);
  box.col_max = std::min(occ.width() - 1, box.col_max + padding);
  return box;
}

OccupancyMap bbox_mask(const BBox& box, int height, int width) {
  require(box.valid_for(height, width), ErrorCode::kInvalidInput, "box outside frame");
  OccupancyMap out(height, width);
  for (int i = box.row_min; i <= box.row_max; ++i)
    for (int j = box.col_min; j <= box.col_max; ++j) out.set(i, j);
  return out;
}

Canvas mask_out(const Canvas& image, const OccupancyMap& occ) {
  require(image.height() == occ.height() && image.width() == occ.width(),
          ErrorCode::kInvalidInput, "canvas and occupancy shapes differ");
  Canvas out = image;
  for (int i = 0; i < image.height(); ++i) {
    for (int j = 0; j < image.width(); ++j) {
      if (!occ.at(i, j)) continue;
      for (int c = 0; c < image.channels(); ++c) out.at(i, j, c) = 0.0f;
    }
  }
  return out;
}

InstanceMask apply_affine(const InstanceMask& mask, const AffineTransform& t) {
  require(t.scale > 0.0 && std::isfinite(t.scale), ErrorCode::kInvalidInput,
          "affine scale must be positive");
  if (t.is_identity()) return mask;
  const auto& src = mask.plane();
  const int h = src.height();
  const int w = src.width();
  double cy = 0.0, cx = 0.0;
  std::size_t n = 0;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      if (!src.at(i, j)) continue;
      cy += i;
      cx += j;
      ++n;
    }
  }
  require(n > 0, ErrorCode::kEmptyMask, "cannot transform an empty mask");
  cy /= static_cast<double>(n);
  cx /= static_cast<double>(n);

  const double theta = t.rotation_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  OccupancyMap out(h, w);
  bool any = false;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      // Inverse map: p = c + R^T (p' - c - d) / s.
      const double u = j - t.dx - cx;
      const double v = i - t.dy - cy;
      const double xs = cx + (cs * u - sn * v) / t.scale;
      const double ys = cy + (sn * u + cs * v) / t.scale;
      const long si = static_cast<long>(std::floor(ys + 0.5));
      const long sj = static_cast<long>(std::floor(xs + 0.5));
      if (si < 0 || si >= h || sj < 0 || sj >= w) continue;
      if (src.at(static_cast<int>(si), static_cast<int>(sj))) {
        out.set(i, j);
        any = true;
      }
    }
  }
  require(any, ErrorCode::kOutOfFrame, "transform moves the mask fully out of frame");
  return InstanceMask(std::move(out), mask.class_id(), mask.n_classes());
}

std::vector<std::int32_t> label_map(const SemanticLayout& layout) {
  std::vector<std::int32_t> labels(static_cast<std::size_t>(layout.height()) * layout.width(), 0);
  for (const auto& inst : layout.instances()) {
    const auto& plane = inst.plane().data();
    for (std::size_t k = 0; k < plane.size(); ++k)
      if (plane[k]) labels[k] = inst.class_id() + 1;
  }
  return labels;
}

}  // namespace layercomp
