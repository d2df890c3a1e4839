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

// Brute-force reference implementations used only by the tests. They are
// written from the definitions, without calling the library code they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "layercomp/layout.hpp"
#include "layercomp/rng.hpp"

namespace layercomp::oracle {

/// Random layout with 0..max_instances masks of random blobs and boxes.
inline SemanticLayout random_layout(Rng& rng, int height, int width, int n_classes, int max_instances,
                                    bool allow_empty_masks = false) {
  SemanticLayout layout(height, width, n_classes);
  const int count = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_instances) + 1));
  for (int t = 0; t < count; ++t) {
    OccupancyMap plane(height, width);
    const double density = rng.uniform(0.05, 0.6);
    const int r0 = static_cast<int>(rng.below(height)), c0 = static_cast<int>(rng.below(width));
    const int r1 = r0 + static_cast<int>(rng.below(height - r0)), c1 = c0 + static_cast<int>(rng.below(width - c0));
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c)
        if (rng.uniform() < density) plane.set(r, c);
    if (!plane.any()) {
      if (allow_empty_masks) continue;
      plane.set(r0, c0);
    }
    layout.add(InstanceMask(plane, static_cast<int>(rng.below(n_classes)), n_classes));
  }
  return layout;
}

/// Dense (row, col, class) volume of one instance, read through at().
inline std::vector<std::uint8_t> dense_instance(const InstanceMask& m) {
  std::vector<std::uint8_t> v(static_cast<std::size_t>(m.height()) * m.width() * m.n_classes(), 0);
  for (int r = 0; r < m.height(); ++r)
    for (int c = 0; c < m.width(); ++c)
      for (int n = 0; n < m.n_classes(); ++n)
        v[(static_cast<std::size_t>(r) * m.width() + c) * m.n_classes() + n] = m.at(r, c, n);
  return v;
}

inline std::vector<std::uint8_t> aggregate(const SemanticLayout& layout) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(layout.height()) * layout.width() * layout.n_classes(), 0);
  for (const auto& m : layout.instances()) {
    const auto d = dense_instance(m);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], d[i]);
  }
  return out;
}

inline std::vector<std::uint8_t> occupancy(const std::vector<std::uint8_t>& agg, int height, int width,
                                           int n_classes) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(height) * width, 0);
  for (int p = 0; p < height * width; ++p)
    for (int n = 0; n < n_classes; ++n)
      if (agg[static_cast<std::size_t>(p) * n_classes + n]) out[p] = 1;
  return out;
}

/// {row_min, row_max, col_min, col_max}; all -1 for an empty map.
inline std::vector<int> bbox(const std::vector<std::uint8_t>& occ, int height, int width, int padding) {
  int rmin = height, rmax = -1, cmin = width, cmax = -1;
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c)
      if (occ[static_cast<std::size_t>(r) * width + c]) {
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
      }
  if (rmax < 0) return {-1, -1, -1, -1};
  return {std::max(0, rmin - padding), std::min(height - 1, rmax + padding), std::max(0, cmin - padding),
          std::min(width - 1, cmax + padding)};
}

inline std::vector<std::int32_t> label_map(const SemanticLayout& layout) {
  std::vector<std::int32_t> out(static_cast<std::size_t>(layout.height()) * layout.width(), 0);
  for (const auto& m : layout.instances())
    for (int r = 0; r < m.height(); ++r)
      for (int c = 0; c < m.width(); ++c)
        if (m.at(r, c, m.class_id())) out[static_cast<std::size_t>(r) * m.width() + c] = m.class_id() + 1;
  return out;
}

/// Corner-aligned bilinear crop of a single-channel H x W image.
inline std::vector<double> bilinear_crop(const std::vector<double>& img, int height, int width, const BBox& box,
                                         int out_h, int out_w) {
  auto coord = [](int k, int out, int lo, int hi) {
    return out == 1 ? 0.5 * (lo + hi) : lo + static_cast<double>(k) * (hi - lo) / (out - 1);
  };
  auto px = [&](int r, int c) {
    r = std::clamp(r, 0, height - 1);
    c = std::clamp(c, 0, width - 1);
    return img[static_cast<std::size_t>(r) * width + c];
  };
  std::vector<double> out;
  for (int i = 0; i < out_h; ++i)
    for (int j = 0; j < out_w; ++j) {
      const double y = coord(i, out_h, box.row_min, box.row_max), x = coord(j, out_w, box.col_min, box.col_max);
      const int y0 = static_cast<int>(std::floor(y)), x0 = static_cast<int>(std::floor(x));
      const double fy = y - y0, fx = x - x0;
      out.push_back((1 - fy) * (1 - fx) * px(y0, x0) + (1 - fy) * fx * px(y0, x0 + 1) +
                    fy * (1 - fx) * px(y0 + 1, x0) + fy * fx * px(y0 + 1, x0 + 1));
    }
  return out;
}

inline double largest_singular_value(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

/// Frechet distance using the eigenvalues of the non-symmetric product:
/// Tr((AB)^{1/2}) = sum_i sqrt(lambda_i(AB)).
inline double frechet(const Eigen::VectorXd& mu_a, const Eigen::MatrixXd& a, const Eigen::VectorXd& mu_b,
                      const Eigen::MatrixXd& b) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(a * b);
  double root_trace = 0.0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) root_trace += std::sqrt(std::max(0.0, es.eigenvalues()(i).real()));
  return (mu_a - mu_b).squaredNorm() + a.trace() + b.trace() - 2.0 * root_trace;
}

inline Eigen::MatrixXd random_psd(Rng& rng, int dim, int rank) {
  Eigen::MatrixXd f(dim, rank);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < rank; ++j) f(i, j) = rng.normal();
  return f * f.transpose() / rank;
}

}  // namespace layercomp::oracle
