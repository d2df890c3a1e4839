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
#include <algorithm>
#include <cmath>
#include <numeric>

#include "layercomp/composer.hpp"
#include "layercomp/error.hpp"
#include "layercomp/image_io.hpp"
#include "layercomp/rng.hpp"

namespace layercomp {

namespace {

struct Scene {
  Canvas image;
  SemanticLayout layout;
};

// The k-th scene: a dataset record when one is given, otherwise a synthetic one.
Scene scene_at(const ExperimentInputs& in, int k) {
  const auto& config = in.generators->config;
  if (in.dataset != nullptr && !in.dataset->empty()) {
    const int r = k % in.dataset->size();
    return {in.dataset->image(r), in.dataset->record(r).layout};
  }
  auto s = synth_scene(derive_seed(in.seed, 0x5c3e + static_cast<std::uint64_t>(k)), config.image_size,
                       config.n_classes);
  return {std::move(s.image), std::move(s.layout)};
}

// First scene (searching forward) with at least `count` instances.
Scene scene_with_objects(const ExperimentInputs& in, int count) {
  const int tries = in.dataset != nullptr && !in.dataset->empty() ? in.dataset->size() : 64;
  Scene best = scene_at(in, 0);
  for (int k = 0; k < tries; ++k) {
    Scene s = scene_at(in, k);
    if (s.layout.size() >= count) return s;
    if (s.layout.size() > best.layout.size()) best = std::move(s);
  }
  require(best.layout.size() >= 1, ErrorCode::kEmptyLayout, "no scene with objects available");
  return best;
}

std::pair<double, double> centroid(const OccupancyMap& occ) {
  double r = 0.0, c = 0.0;
  std::size_t n = 0;
  for (int i = 0; i < occ.height(); ++i)
    for (int j = 0; j < occ.width(); ++j)
      if (occ.at(i, j)) {
        r += i;
        c += j;
        ++n;
      }
  return {r / static_cast<double>(n), c / static_cast<double>(n)};
}

InstanceMask move_to(const InstanceMask& mask, double row, double col) {
  const auto [r, c] = centroid(mask.plane());
  AffineTransform t;
  t.dx = std::round(col - c);
  t.dy = std::round(row - r);
  return apply_affine(mask, t);
}

std::vector<double> spread(double lo, double hi, int n) {
  std::vector<double> out;
  for (int k = 0; k < n; ++k) out.push_back(n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * k / (n - 1));
  return out;
}

std::uint64_t sub_seed(const ExperimentInputs& in, std::uint64_t salt) { return derive_seed(in.seed, salt); }

CompositionSession fresh(const ExperimentInputs& in, std::uint64_t bg_seed) {
  return CompositionSession(in.generators, BackgroundSource::generate(bg_seed), in.mode);
}

// Canvas for one cell, or the session background when the transform leaves the frame.
Canvas with_object(const ExperimentInputs& in, std::uint64_t bg_seed, const InstanceMask& mask,
                   const AffineTransform& t, std::uint64_t seed) {
  auto s = fresh(in, bg_seed);
  try {
    return s.add_object(apply_affine(mask, t), seed);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kOutOfFrame) throw;
    return s.current();
  }
}

using Grid = std::vector<std::vector<Canvas>>;

void affine(const ExperimentInputs& in, Grid& grid, std::vector<std::string>& labels) {
  const int size = in.generators->config.image_size;
  const auto scene = scene_with_objects(in, 1);
  const auto mask = move_to(scene.layout[0], size / 2.0, size / 2.0);
  const auto bg = sub_seed(in, 1), obj = sub_seed(in, 2);
  const int cols = std::max(2, in.cols);
  std::vector<Canvas> row;
  for (double v : spread(-size / 4.0, size / 4.0, cols)) {
    AffineTransform t;
    t.dx = std::round(v);
    row.push_back(with_object(in, bg, mask, t, obj));
  }
  grid.push_back(std::move(row));
  labels.push_back("translation");
  row.clear();
  for (double v : spread(-90.0, 90.0, cols)) {
    AffineTransform t;
    t.rotation_deg = v;
    row.push_back(with_object(in, bg, mask, t, obj));
  }
  grid.push_back(std::move(row));
  labels.push_back("rotation");
  row.clear();
  for (double v : spread(0.6, 1.5, cols)) {
    AffineTransform t;
    t.scale = v;
    row.push_back(with_object(in, bg, mask, t, obj));
  }
  grid.push_back(std::move(row));
  labels.push_back("scale");
}

void occlusion(const ExperimentInputs& in, Grid& grid, std::vector<std::string>& labels) {
  const int size = in.generators->config.image_size;
  const auto scene = scene_with_objects(in, 2);
  const InstanceMask& a = scene.layout[0];
  const InstanceMask& b = scene.layout.size() > 1 ? scene.layout[1] : scene.layout[0];
  const auto bg = sub_seed(in, 1), seed_a = sub_seed(in, 2), seed_b = sub_seed(in, 3);
  const int rows = std::max(1, in.rows);
  for (int r = 0; r < rows; ++r) {
    // Centroids start a half frame apart and meet at the center in the last row.
    const double gap = size / 4.0 * (1.0 - (rows == 1 ? 0.0 : static_cast<double>(r) / (rows - 1)));
    auto s = fresh(in, bg);
    std::vector<Canvas> row{s.current()};
    row.push_back(s.add_object(move_to(a, size / 2.0, size / 2.0 - gap), seed_a));
    row.push_back(s.add_object(move_to(b, size / 2.0, size / 2.0 + gap), seed_b));
    grid.push_back(std::move(row));
    labels.push_back("offset " + std::to_string(static_cast<int>(std::lround(2.0 * gap))));
  }
}

void order(const ExperimentInputs& in, Grid& grid, std::vector<std::string>& labels) {
  const auto scene = scene_with_objects(in, 3);
  const auto bg = sub_seed(in, 1);
  const auto seeds = object_seeds_for(sub_seed(in, 2), scene.layout.size());
  auto base = fresh(in, bg);
  for (int t = 0; t < scene.layout.size(); ++t) base.add_object(scene.layout[t], seeds[static_cast<std::size_t>(t)]);
  std::vector<int> perm(static_cast<std::size_t>(scene.layout.size()));
  std::iota(perm.begin(), perm.end(), 0);
  const int rows = std::max(1, in.rows);
  for (int r = 0; r < rows; ++r) {
    auto s = base;
    s.reorder(perm);
    grid.push_back(s.canvases());
    std::string label = "order";
    for (int id : perm) label += " " + std::to_string(id);
    labels.push_back(label);
    if (!std::next_permutation(perm.begin(), perm.end())) break;
  }
}

void variation(const ExperimentInputs& in, Grid& grid, std::vector<std::string>& labels) {
  const int size = in.generators->config.image_size;
  const auto scene = scene_with_objects(in, 1);
  const auto mask = move_to(scene.layout[0], size / 2.0, size / 2.0);
  const int rows = std::max(1, in.rows), cols = std::max(1, in.cols);
  for (int r = 0; r < rows; ++r) {
    const auto bg = sub_seed(in, 100 + static_cast<std::uint64_t>(r));
    std::vector<Canvas> row;
    for (int c = 0; c < cols; ++c) {
      auto s = fresh(in, bg);
      row.push_back(s.add_object(mask, sub_seed(in, 1000 + static_cast<std::uint64_t>(c))));
    }
    grid.push_back(std::move(row));
    labels.push_back("background " + std::to_string(r));
  }
}

void edit(const ExperimentInputs& in, Grid& grid, std::vector<std::string>& labels) {
  const auto objects = scene_with_objects(in, 2);
  const int count = std::min(2, objects.layout.size());
  const auto seeds = object_seeds_for(sub_seed(in, 2), count);
  const int rows = std::max(1, in.rows);
  for (int r = 0; r < rows; ++r) {
    auto photo = scene_at(in, r + 1);
    CompositionSession s(in.generators, BackgroundSource::upload(std::move(photo.image)), in.mode);
    for (int t = 0; t < count; ++t) s.add_object(objects.layout[t], seeds[static_cast<std::size_t>(t)]);
    grid.push_back(s.canvases());
    labels.push_back("image " + std::to_string(r + 1));
  }
}

void bbox(const ExperimentInputs& in, Grid& grid, std::vector<std::string>& labels) {
  require(in.generators->has_mask_generator(), ErrorCode::kConfig,
          "the bbox experiment needs a mask generator checkpoint");
  const int size = in.generators->config.image_size;
  const int n = in.generators->config.n_classes;
  const auto bg = sub_seed(in, 1);
  const int rows = std::max(1, in.rows), cols = std::max(1, in.cols);
  for (int r = 0; r < rows; ++r) {
    const int cls = r % n;
    // Box side grows with the row index, centered in the frame.
    const int half = std::max(2, size / 8 + (size / 16) * (r / n));
    const BBox box{size / 2 - half, size / 2 + half - 1, size / 2 - half, size / 2 + half - 1};
    std::vector<Canvas> row;
    for (int c = 0; c < cols; ++c) {
      auto s = fresh(in, bg);
      row.push_back(s.add_object_from_bbox(box, cls, sub_seed(in, 1000 + static_cast<std::uint64_t>(c))));
    }
    grid.push_back(std::move(row));
    labels.push_back("class " + std::to_string(cls) + " box " + std::to_string(2 * half));
  }
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"affine", "occlusion", "order", "variation", "edit", "bbox"};
  return names;
}

ExperimentResult run_experiment(const std::string& name, const ExperimentInputs& inputs,
                                const std::filesystem::path& out_dir) {
  require(inputs.generators != nullptr, ErrorCode::kInvalidInput, "experiments need generators");
  Grid grid;
  ExperimentResult result;
  result.name = name;
  if (name == "affine") affine(inputs, grid, result.row_labels);
  else if (name == "occlusion") occlusion(inputs, grid, result.row_labels);
  else if (name == "order") order(inputs, grid, result.row_labels);
  else if (name == "variation") variation(inputs, grid, result.row_labels);
  else if (name == "edit") edit(inputs, grid, result.row_labels);
  else if (name == "bbox") bbox(inputs, grid, result.row_labels);
  else fail(ErrorCode::kInvalidInput, "unknown experiment '" + name + "'");

  result.rows = static_cast<int>(grid.size());
  result.cols = grid.empty() ? 0 : static_cast<int>(grid.front().size());
  result.grid = make_grid(grid);
  result.hash = canvas_hash(result.grid);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    result.image_path = out_dir / (name + ".png");
    result.manifest_path = out_dir / (name + ".json");
    save_png(result.grid, result.image_path);
    const auto& g = *inputs.generators;
    nlohmann::json manifest = {
        {"experiment", name},
        {"rows", result.rows},
        {"cols", result.cols},
        {"row_labels", result.row_labels},
        {"seed", inputs.seed},
        {"mode", to_string(inputs.mode)},
        {"checkpoints", {{"background", g.background_hash}, {"foreground", g.foreground_hash}, {"mask", g.mask_hash}}},
        {"grid_hash", result.hash},
        {"image", result.image_path.filename().string()}};
    write_file(result.manifest_path, manifest.dump(2) + "\n");
  }
  return result;
}

}  // namespace layercomp
