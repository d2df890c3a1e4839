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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "layercomp/canvas.hpp"

namespace layercomp {

using Rgb = std::array<std::uint8_t, 3>;

/// Ordered category labels. Colors are only used for rendering layouts.
class ClassPalette {
 public:
  ClassPalette() = default;
  ClassPalette(std::vector<std::string> names, std::vector<Rgb> colors = {});

  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Rgb>& colors() const { return colors_; }
  const std::string& name(int class_id) const { return names_.at(class_id); }
  Rgb color(int class_id) const { return colors_.at(class_id); }
  int index_of(const std::string& name) const;  // -1 when absent

  friend bool operator==(const ClassPalette&, const ClassPalette&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<Rgb> colors_;
};

/// H x W binary map.
class OccupancyMap {
 public:
  OccupancyMap() = default;
  OccupancyMap(int height, int width, std::uint8_t fill = 0);
  OccupancyMap(int height, int width, std::vector<std::uint8_t> data);

  int height() const { return height_; }
  int width() const { return width_; }
  std::uint8_t at(int row, int col) const { return data_[index(row, col)]; }
  void set(int row, int col, std::uint8_t v = 1) { data_[index(row, col)] = v ? 1 : 0; }
  const std::vector<std::uint8_t>& data() const { return data_; }

  std::size_t count() const;
  bool any() const;

  friend bool operator==(const OccupancyMap&, const OccupancyMap&) = default;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * width_ + col;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> data_;
};

/// H x W x N binary volume (HWC layout).
class AggregatedMap {
 public:
  AggregatedMap() = default;
  AggregatedMap(int height, int width, int n_classes);
  AggregatedMap(int height, int width, int n_classes, std::vector<std::uint8_t> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int n_classes() const { return n_classes_; }
  std::uint8_t at(int row, int col, int n) const { return data_[index(row, col, n)]; }
  void set(int row, int col, int n, std::uint8_t v = 1) {
    data_[index(row, col, n)] = v ? 1 : 0;
  }
  const std::vector<std::uint8_t>& data() const { return data_; }

  friend bool operator==(const AggregatedMap&, const AggregatedMap&) = default;

 private:
  std::size_t index(int row, int col, int n) const {
    return (static_cast<std::size_t>(row) * width_ + col) * n_classes_ + n;
  }

  int height_ = 0;
  int width_ = 0;
  int n_classes_ = 0;
  std::vector<std::uint8_t> data_;
};

/// One foreground object: an H x W x N binary tensor whose only nonzero
/// channel is `class_id`. Stored as the H x W plane of that channel, so the
/// single-channel invariant holds by construction.
class InstanceMask {
 public:
  InstanceMask() = default;
  InstanceMask(OccupancyMap plane, int class_id, int n_classes);

  /// Validating constructor from a dense volume. Throws kInvalidInput when
  /// more than one channel is set or `class_id` disagrees with the data.
  static InstanceMask from_dense(const AggregatedMap& dense, int class_id);

  int height() const { return plane_.height(); }
  int width() const { return plane_.width(); }
  int n_classes() const { return n_classes_; }
  int class_id() const { return class_id_; }
  const OccupancyMap& plane() const { return plane_; }

  std::uint8_t at(int row, int col, int n) const {
    return n == class_id_ ? plane_.at(row, col) : 0;
  }
  bool empty() const { return !plane_.any(); }
  AggregatedMap to_dense() const;

  friend bool operator==(const InstanceMask&, const InstanceMask&) = default;

 private:
  OccupancyMap plane_;
  int class_id_ = 0;
  int n_classes_ = 0;
};

/// Ordered set of instance masks sharing one H x W x N shape.
class SemanticLayout {
 public:
  SemanticLayout() = default;
  SemanticLayout(int height, int width, int n_classes);

  void add(InstanceMask mask);

  int height() const { return height_; }
  int width() const { return width_; }
  int n_classes() const { return n_classes_; }
  int size() const { return static_cast<int>(instances_.size()); }
  bool empty() const { return instances_.empty(); }
  const InstanceMask& operator[](int t) const { return instances_.at(t); }
  const std::vector<InstanceMask>& instances() const { return instances_; }

  friend bool operator==(const SemanticLayout&, const SemanticLayout&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int n_classes_ = 0;
  std::vector<InstanceMask> instances_;
};

/// Inclusive pixel box.
struct BBox {
  int row_min = 0;
  int row_max = 0;
  int col_min = 0;
  int col_max = 0;

  int rows() const { return row_max - row_min + 1; }
  int cols() const { return col_max - col_min + 1; }
  bool contains(int row, int col) const {
    return row >= row_min && row <= row_max && col >= col_min && col <= col_max;
  }
  bool valid_for(int height, int width) const {
    return 0 <= row_min && row_min <= row_max && row_max < height && 0 <= col_min &&
           col_min <= col_max && col_max < width;
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Translation in pixels, rotation in degrees (counter-clockwise as displayed)
/// about the mask centroid, then isotropic scale about the same centroid.
struct AffineTransform {
  double dx = 0.0;
  double dy = 0.0;
  double rotation_deg = 0.0;
  double scale = 1.0;

  bool is_identity() const { return dx == 0.0 && dy == 0.0 && rotation_deg == 0.0 && scale == 1.0; }

  friend bool operator==(const AffineTransform&, const AffineTransform&) = default;
};

OccupancyMap occupancy_of(const InstanceMask& mask);

/// Elementwise max over every instance. Throws kEmptyLayout when T = 0.
AggregatedMap aggregate(const SemanticLayout& layout);

OccupancyMap aggregate_occupancy(const AggregatedMap& agg);

/// Tightest box around the nonzero pixels, grown by `padding` and clamped to
/// the frame. Throws kEmptyMask for an all-zero map.
BBox bbox_of(const OccupancyMap& occ, int padding = 0);

OccupancyMap bbox_mask(const BBox& box, int height, int width);

/// Zeroes every channel of the pixels where occ = 1.
Canvas mask_out(const Canvas& image, const OccupancyMap& occ);

/// Nearest-neighbour resampling of the mask under `t`. Throws kOutOfFrame
/// when no pixel survives.
InstanceMask apply_affine(const InstanceMask& mask, const AffineTransform& t);

/// Per-pixel label map (0 = background, class_id + 1 otherwise). Later
/// instances overwrite earlier ones, matching composition order.
std::vector<std::int32_t> label_map(const SemanticLayout& layout);

}  // namespace layercomp
