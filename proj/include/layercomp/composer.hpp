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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layercomp/canvas.hpp"
#include "layercomp/dataset.hpp"
#include "layercomp/layout.hpp"
#include "layercomp/nets/inference.hpp"

namespace layercomp {

/// kHard pastes the generator output inside the object's box only, so every
/// pixel outside it is carried over unchanged. kRaw keeps the full frame.
enum class ComposeMode { kHard, kRaw };

std::string to_string(ComposeMode mode);
ComposeMode parse_compose_mode(const std::string& text);

/// Salt that separates mask-generator noise from appearance noise.
inline constexpr std::uint64_t kMaskNoiseSalt = 0x6d61736b;

struct BackgroundSource {
  enum class Kind { kGenerate, kUpload };
  Kind kind = Kind::kGenerate;
  std::uint64_t seed = 0;  // kGenerate
  Canvas image;            // kUpload

  static BackgroundSource generate(std::uint64_t seed) { return {Kind::kGenerate, seed, {}}; }
  static BackgroundSource upload(Canvas image) { return {Kind::kUpload, 0, std::move(image)}; }
};

struct CompositionStep {
  int object_id = 0;
  InstanceMask mask;  // mask in effect, after any transforms
  std::uint64_t noise_seed = 0;
  BBox bbox;  // tight box of `mask`
  std::optional<BBox> source_box;  // set when the mask came from the mask generator
  std::vector<AffineTransform> transforms;

  int class_id() const { return mask.class_id(); }
};

/// Canvas x_t for each prefix of the object sequence. canvases()[0] is the
/// background and canvases()[t] the scene after step t.
class CompositionSession {
 public:
  CompositionSession(std::shared_ptr<GeneratorSet> generators, BackgroundSource background,
                     ComposeMode mode, std::string session_id = {});

  const std::string& id() const { return id_; }
  ComposeMode mode() const { return mode_; }
  const BackgroundSource& background() const { return background_; }
  int height() const { return generators_->config.image_size; }
  int width() const { return generators_->config.image_size; }
  int n_classes() const { return generators_->config.n_classes; }
  const std::vector<CompositionStep>& steps() const { return steps_; }
  const std::vector<Canvas>& canvases() const { return canvases_; }
  const Canvas& canvas(int t) const;
  const Canvas& current() const { return canvases_.back(); }
  /// Position of an object in the step list (kNotFound when absent).
  int index_of(int object_id) const;
  const GeneratorSet& generators() const { return *generators_; }

  Canvas add_object(const InstanceMask& mask, std::uint64_t seed);
  Canvas add_object_from_bbox(const BBox& box, int class_id, std::uint64_t seed);
  Canvas resample_object(int object_id, std::uint64_t seed);
  /// `order` must be a permutation of the current object ids (kConflict).
  Canvas reorder(const std::vector<int>& order);
  Canvas transform_object(int object_id, const AffineTransform& t);

  nlohmann::json to_json() const;
  /// Rebuilds a session by replaying its record. Throws kVersion when the
  /// record names other checkpoints and kContract when a replayed canvas
  /// differs from the recorded hash.
  static CompositionSession from_json(const nlohmann::json& doc,
                                      std::shared_ptr<GeneratorSet> generators);

 private:
  Canvas render_step(const Canvas& previous, const CompositionStep& step) const;
  void replay_from(int t);
  void check_mask(const InstanceMask& mask) const;

  std::shared_ptr<GeneratorSet> generators_;
  BackgroundSource background_;
  ComposeMode mode_;
  std::string id_;
  std::vector<CompositionStep> steps_;
  std::vector<Canvas> canvases_;
  int next_object_id_ = 0;
};

/// Fingerprint of a canvas's float samples.
std::string canvas_hash(const Canvas& canvas);

/// One-shot composition: the background from `bg_seed`, then each instance
/// in layout order with its seed. Equivalent to issuing the steps on a
/// session one by one.
Canvas compose(std::shared_ptr<GeneratorSet> generators, const SemanticLayout& layout,
               std::uint64_t bg_seed, const std::vector<std::uint64_t>& object_seeds,
               ComposeMode mode = ComposeMode::kHard);

/// Seeds for compose() derived from a single integer.
std::vector<std::uint64_t> object_seeds_for(std::uint64_t seed, int count);

// ---- scripted experiments ---------------------------------------------------------

struct ExperimentInputs {
  std::shared_ptr<GeneratorSet> generators;
  const DatasetIndex* dataset = nullptr;  // layouts and real images
  std::uint64_t seed = 0;
  int rows = 4;  // offsets, orders, variations or boxes, depending on the script
  int cols = 5;
  ComposeMode mode = ComposeMode::kHard;
};

struct ExperimentResult {
  std::string name;
  Canvas grid;
  int rows = 0;
  int cols = 0;
  std::vector<std::string> row_labels;
  std::string hash;  // canvas_hash of the grid
  std::filesystem::path image_path;
  std::filesystem::path manifest_path;
};

/// Names: affine, occlusion, order, variation, edit, bbox.
const std::vector<std::string>& experiment_names();

/// Runs one scripted scenario and writes <name>.png and <name>.json under
/// `out_dir` (skipped when empty).
ExperimentResult run_experiment(const std::string& name, const ExperimentInputs& inputs,
                                const std::filesystem::path& out_dir);

}  // namespace layercomp
