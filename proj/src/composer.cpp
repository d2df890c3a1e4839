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
#include "layercomp/composer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include "layercomp/error.hpp"
#include "layercomp/image_io.hpp"
#include "layercomp/rle.hpp"
#include "layercomp/rng.hpp"

namespace layercomp {

std::string to_string(ComposeMode mode) { return mode == ComposeMode::kHard ? "hard" : "raw"; }

ComposeMode parse_compose_mode(const std::string& text) {
  if (text == "hard") return ComposeMode::kHard;
  if (text == "raw") return ComposeMode::kRaw;
  fail(ErrorCode::kInvalidInput, "unknown compositing mode '" + text + "'");
}

std::string canvas_hash(const Canvas& canvas) {
  const auto data = canvas.data();
  std::uint64_t h = fnv1a64(data.data(), data.size_bytes());
  const int dims[3] = {canvas.height(), canvas.width(), canvas.channels()};
  h = fnv1a64(dims, sizeof dims, h);
  return hex64(h);
}

namespace {

std::string floats_to_base64(std::span<const float> values) {
  std::vector<std::uint8_t> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &values[i], 4);
    for (int k = 0; k < 4; ++k) bytes[4 * i + k] = static_cast<std::uint8_t>(bits >> (8 * k));
  }
  return base64_encode(bytes);
}

std::vector<float> floats_from_base64(const std::string& text) {
  const auto bytes = base64_decode(text);
  require(bytes.size() % 4 == 0, ErrorCode::kParse, "float payload length is not a multiple of 4");
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(bytes[4 * i + k]) << (8 * k);
    std::memcpy(&out[i], &bits, 4);
  }
  return out;
}

nlohmann::json box_to_json(const BBox& b) { return {b.row_min, b.row_max, b.col_min, b.col_max}; }

BBox box_from_json(const nlohmann::json& j) {
  require(j.is_array() && j.size() == 4, ErrorCode::kParse, "box must be [r0, r1, c0, c1]");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

nlohmann::json transform_to_json(const AffineTransform& t) {
  return {{"dx", t.dx}, {"dy", t.dy}, {"rotation", t.rotation_deg}, {"scale", t.scale}};
}

AffineTransform transform_from_json(const nlohmann::json& j) {
  AffineTransform t;
  t.dx = j.value("dx", 0.0);
  t.dy = j.value("dy", 0.0);
  t.rotation_deg = j.value("rotation", 0.0);
  t.scale = j.value("scale", 1.0);
  return t;
}

}  // namespace

// ---- session ---------------------------------------------------------------------

CompositionSession::CompositionSession(std::shared_ptr<GeneratorSet> generators,
                                       BackgroundSource background, ComposeMode mode,
                                       std::string session_id)
    : generators_(std::move(generators)),
      background_(std::move(background)),
      mode_(mode),
      id_(std::move(session_id)) {
  require(generators_ != nullptr && !generators_->background.is_empty() &&
              !generators_->foreground.is_empty(),
          ErrorCode::kInvalidInput, "a session needs background and foreground generators");
  Canvas x0;
  if (background_.kind == BackgroundSource::Kind::kGenerate) {
    x0 = bg_inference(generators_->background,
                      noise_from_seed(background_.seed, generators_->config.z_dim));
  } else {
    const auto& img = background_.image;
    require(img.height() == height() && img.width() == width() && img.channels() == 3,
            ErrorCode::kInvalidInput, "uploaded background has the wrong size");
    require(img.in_range(), ErrorCode::kInvalidInput, "uploaded background is outside [-1, 1]");
    x0 = img;
  }
  canvases_.push_back(std::move(x0));
}

const Canvas& CompositionSession::canvas(int t) const {
  require(t >= 0 && t < static_cast<int>(canvases_.size()), ErrorCode::kNotFound,
          "no canvas for step " + std::to_string(t));
  return canvases_[static_cast<std::size_t>(t)];
}

int CompositionSession::index_of(int object_id) const {
  for (std::size_t i = 0; i < steps_.size(); ++i)
    if (steps_[i].object_id == object_id) return static_cast<int>(i);
  fail(ErrorCode::kNotFound, "unknown object " + std::to_string(object_id));
}

void CompositionSession::check_mask(const InstanceMask& mask) const {
  require(mask.height() == height() && mask.width() == width() && mask.n_classes() == n_classes(),
          ErrorCode::kInvalidInput, "mask shape does not match the session");
  require(mask.class_id() >= 0 && mask.class_id() < n_classes(), ErrorCode::kInvalidInput,
          "class id out of range");
  require(!mask.empty(), ErrorCode::kEmptyMask, "mask has no pixels");
}

Canvas CompositionSession::render_step(const Canvas& previous, const CompositionStep& step) const {
  const auto occ = occupancy_of(step.mask);
  const Canvas generated =
      fg_forward(generators_->foreground, mask_out(previous, occ), step.mask,
                 noise_from_seed(step.noise_seed, generators_->config.z_dim));
  if (mode_ == ComposeMode::kRaw) return generated;
  Canvas out = previous;
  const BBox& b = step.bbox;
  for (int i = b.row_min; i <= b.row_max; ++i)
    for (int j = b.col_min; j <= b.col_max; ++j)
      for (int c = 0; c < out.channels(); ++c) out.at(i, j, c) = generated.at(i, j, c);
  return out;
}

void CompositionSession::replay_from(int t) {
  canvases_.resize(static_cast<std::size_t>(t) + 1);
  for (std::size_t i = static_cast<std::size_t>(t); i < steps_.size(); ++i)
    canvases_.push_back(render_step(canvases_.back(), steps_[i]));
}

Canvas CompositionSession::add_object(const InstanceMask& mask, std::uint64_t seed) {
  check_mask(mask);
  CompositionStep step;
  step.object_id = next_object_id_;
  step.mask = mask;
  step.noise_seed = seed;
  step.bbox = bbox_of(mask.plane());
  canvases_.push_back(render_step(canvases_.back(), step));
  steps_.push_back(std::move(step));
  ++next_object_id_;
  return canvases_.back();
}

Canvas CompositionSession::add_object_from_bbox(const BBox& box, int class_id, std::uint64_t seed) {
  require(generators_->has_mask_generator(), ErrorCode::kConfig, "no mask generator loaded");
  const auto mask = mask_gen_forward(generators_->mask, box, class_id,
                                     noise_from_seed(derive_seed(seed, kMaskNoiseSalt),
                                                     generators_->config.z_dim));
  add_object(mask, seed);
  steps_.back().source_box = box;
  return canvases_.back();
}

Canvas CompositionSession::resample_object(int object_id, std::uint64_t seed) {
  const int t = index_of(object_id);
  steps_[static_cast<std::size_t>(t)].noise_seed = seed;
  replay_from(t);
  return canvases_.back();
}

Canvas CompositionSession::reorder(const std::vector<int>& order) {
  std::vector<int> current;
  for (const auto& s : steps_) current.push_back(s.object_id);
  require(order.size() == current.size() &&
              std::set<int>(order.begin(), order.end()) == std::set<int>(current.begin(), current.end()),
          ErrorCode::kConflict, "order is not a permutation of the session's objects");
  std::vector<CompositionStep> reordered;
  for (int id : order) reordered.push_back(steps_[static_cast<std::size_t>(index_of(id))]);
  int first = static_cast<int>(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (order[i] != current[i]) {
      first = static_cast<int>(i);
      break;
    }
  }
  steps_ = std::move(reordered);
  replay_from(first);
  return canvases_.back();
}

Canvas CompositionSession::transform_object(int object_id, const AffineTransform& t) {
  const int i = index_of(object_id);
  auto& step = steps_[static_cast<std::size_t>(i)];
  InstanceMask moved = apply_affine(step.mask, t);
  step.mask = std::move(moved);
  step.bbox = bbox_of(step.mask.plane());
  step.transforms.push_back(t);
  replay_from(i);
  return canvases_.back();
}

nlohmann::json CompositionSession::to_json() const {
  nlohmann::json bg;
  if (background_.kind == BackgroundSource::Kind::kGenerate) {
    bg = {{"kind", "generate"}, {"seed", background_.seed}};
  } else {
    bg = {{"kind", "upload"}, {"pixels_f32", floats_to_base64(background_.image.data())}};
  }
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : steps_) {
    nlohmann::json j = {{"object_id", s.object_id},
                        {"class_id", s.class_id()},
                        {"mask_rle", rle_encode(s.mask.plane())},
                        {"seed", s.noise_seed},
                        {"bbox", box_to_json(s.bbox)}};
    if (s.source_box) j["source_box"] = box_to_json(*s.source_box);
    nlohmann::json history = nlohmann::json::array();
    for (const auto& t : s.transforms) history.push_back(transform_to_json(t));
    j["transforms"] = std::move(history);
    steps.push_back(std::move(j));
  }
  nlohmann::json hashes = nlohmann::json::array();
  for (const auto& c : canvases_) hashes.push_back(canvas_hash(c));
  return {{"format", "layercomp-session"},
          {"version", 1},
          {"session_id", id_},
          {"mode", to_string(mode_)},
          {"height", height()},
          {"width", width()},
          {"n_classes", n_classes()},
          {"background", std::move(bg)},
          {"steps", std::move(steps)},
          {"next_object_id", next_object_id_},
          {"checkpoints",
           {{"background", generators_->background_hash},
            {"foreground", generators_->foreground_hash},
            {"mask", generators_->mask_hash}}},
          {"canvas_hashes", std::move(hashes)}};
}

CompositionSession CompositionSession::from_json(const nlohmann::json& doc,
                                                 std::shared_ptr<GeneratorSet> generators) {
  require(generators != nullptr, ErrorCode::kInvalidInput, "generators are required");
  try {
    require(doc.value("format", "") == "layercomp-session" && doc.value("version", 0) == 1,
            ErrorCode::kVersion, "not a version 1 session record");
    const auto& ck = doc.at("checkpoints");
    require(ck.value("background", "") == generators->background_hash &&
                ck.value("foreground", "") == generators->foreground_hash,
            ErrorCode::kVersion, "session was recorded with different checkpoints");
    const int h = doc.at("height").get<int>();
    const int w = doc.at("width").get<int>();
    const int n = doc.at("n_classes").get<int>();
    require(h == generators->config.image_size && w == generators->config.image_size &&
                n == generators->config.n_classes,
            ErrorCode::kVersion, "session shape does not match the loaded networks");

    const auto& bg = doc.at("background");
    BackgroundSource source;
    if (bg.at("kind").get<std::string>() == "generate") {
      source = BackgroundSource::generate(bg.at("seed").get<std::uint64_t>());
    } else {
      require(bg.at("kind").get<std::string>() == "upload", ErrorCode::kParse, "unknown background kind");
      auto pixels = floats_from_base64(bg.at("pixels_f32").get<std::string>());
      require(pixels.size() == static_cast<std::size_t>(h) * w * 3, ErrorCode::kParse,
              "uploaded background has the wrong size");
      source = BackgroundSource::upload(Canvas(h, w, 3, std::move(pixels)));
    }
    CompositionSession s(std::move(generators), std::move(source),
                         parse_compose_mode(doc.at("mode").get<std::string>()),
                         doc.value("session_id", ""));
    for (const auto& j : doc.at("steps")) {
      CompositionStep step;
      step.object_id = j.at("object_id").get<int>();
      step.mask = InstanceMask(rle_decode(j.at("mask_rle").get<std::string>(), h, w),
                               j.at("class_id").get<int>(), n);
      s.check_mask(step.mask);
      step.noise_seed = j.at("seed").get<std::uint64_t>();
      step.bbox = bbox_of(step.mask.plane());
      if (j.contains("source_box")) step.source_box = box_from_json(j.at("source_box"));
      for (const auto& t : j.value("transforms", nlohmann::json::array()))
        step.transforms.push_back(transform_from_json(t));
      s.steps_.push_back(std::move(step));
    }
    s.next_object_id_ = doc.value("next_object_id", static_cast<int>(s.steps_.size()));
    s.replay_from(0);
    if (doc.contains("canvas_hashes")) {
      const auto& hashes = doc.at("canvas_hashes");
      require(hashes.size() == s.canvases_.size(), ErrorCode::kContract,
              "recorded canvas count does not match the steps");
      for (std::size_t t = 0; t < hashes.size(); ++t) {
        require(hashes[t].get<std::string>() == canvas_hash(s.canvases_[t]), ErrorCode::kContract,
                "replayed canvas " + std::to_string(t) + " differs from the record");
      }
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed session record: ") + e.what());
  }
}

// ---- one-shot composition ----------------------------------------------------------

std::vector<std::uint64_t> object_seeds_for(std::uint64_t seed, int count) {
  std::vector<std::uint64_t> out;
  for (int t = 0; t < count; ++t) out.push_back(derive_seed(seed, static_cast<std::uint64_t>(t) + 1));
  return out;
}

Canvas compose(std::shared_ptr<GeneratorSet> generators, const SemanticLayout& layout,
               std::uint64_t bg_seed, const std::vector<std::uint64_t>& object_seeds,
               ComposeMode mode) {
  require(static_cast<int>(object_seeds.size()) == layout.size(), ErrorCode::kInvalidInput,
          "one seed per layout instance is required");
  CompositionSession s(std::move(generators), BackgroundSource::generate(bg_seed), mode);
  for (int t = 0; t < layout.size(); ++t) s.add_object(layout[t], object_seeds[static_cast<std::size_t>(t)]);
  return s.current();
}

}  // namespace layercomp
