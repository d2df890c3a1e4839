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
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layercomp/dataset.hpp"
#include "layercomp/losses.hpp"
#include "layercomp/nets/checkpoint.hpp"
#include "layercomp/nets/config.hpp"

namespace layercomp {

struct TrainConfig {
  int epochs = 480;
  int batch = 16;
  double lr0 = 2e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  int lr_halving_period = 80;  // epochs
  int d_steps_per_g = 5;
  std::uint64_t seed = 0;
  LossWeights weights;
  NetConfig net;

  std::int64_t max_g_steps = 0;  // stop early when positive
  int snapshot_every = 1;        // epochs between numbered snapshots; 0 disables
  int log_every = 1;             // G-steps between log lines
  bool deterministic = true;     // single-threaded, bit-reproducible

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& doc);
  /// CPU-scale preset: desk network, batch 8, stops after `g_steps`.
  static TrainConfig desk(int image_size, int n_classes, std::int64_t g_steps = 2000);

  /// One epoch is one pass of G-steps over the dataset.
  std::int64_t steps_per_epoch(int dataset_size) const;
  std::int64_t total_g_steps(int dataset_size) const;
};

/// lr0 / 2^floor(epoch / lr_halving_period).
double lr_schedule(const TrainConfig& config, int epoch);

/// Tracks D- and G-updates and enforces d = ratio * g + k with
/// 0 <= k < ratio whenever a D-step starts, and k = 0 after every G-step.
/// Violations throw kContract.
class UpdateRatioCounter {
 public:
  explicit UpdateRatioCounter(int ratio);

  void begin_d_step();
  void end_d_step();
  void end_g_step();
  void restore(std::int64_t g_steps, std::int64_t d_steps);

  std::int64_t g_steps() const { return g_steps_; }
  std::int64_t d_steps() const { return d_steps_; }
  int ratio() const { return ratio_; }
  /// |d - ratio * g| <= ratio - 1.
  bool holds() const;

 private:
  int ratio_;
  std::int64_t g_steps_ = 0;
  std::int64_t d_steps_ = 0;
};

using LossRecord = std::map<std::string, double>;

/// Stops training on any non-finite loss, or once |d-loss| has exceeded
/// `d_limit` for `patience` consecutive steps.
class DivergenceGuard {
 public:
  explicit DivergenceGuard(double d_limit = 1e4, int patience = 50);
  std::optional<std::string> observe(const LossRecord& losses, double d_loss);

 private:
  double d_limit_;
  int patience_;
  int over_limit_ = 0;
};

struct StepRecord {
  std::int64_t step = 0;  // G-steps completed
  std::int64_t d_steps = 0;
  int epoch = 0;
  double lr = 0.0;
  LossRecord losses;
  double wallclock = 0.0;  // seconds since the run started

  nlohmann::json to_json() const;
};

struct TrainOptions {
  std::filesystem::path out_dir;  // empty: keep everything in memory
  std::optional<std::filesystem::path> resume;
  std::function<void(const StepRecord&)> on_step;
};

struct TrainResult {
  ModelCheckpoint checkpoint;  // final state, or the last good one after divergence
  std::vector<StepRecord> history;
  std::vector<std::filesystem::path> written;
  bool diverged = false;
  std::string divergence_report;
  std::int64_t g_steps = 0;
  std::int64_t d_steps = 0;
};

/// Background model: D sees (x, M_agg) against (scene branch, M_agg); G
/// minimizes adv + rec_bg * masked_l2(background branch, x, occupancy) +
/// fm_bg * feature matching.
TrainResult train_bg(const DatasetIndex& index, const TrainConfig& config,
                     const TrainOptions& options = {});

/// Foreground model trained as inpainting on real images; each D-step
/// updates the global and the local discriminator together.
TrainResult train_fg(const DatasetIndex& index, const TrainConfig& config,
                     const TrainOptions& options = {});

/// Box-to-mask generator against a crop discriminator.
TrainResult train_mask_gen(const DatasetIndex& index, const TrainConfig& config,
                           const TrainOptions& options = {});

/// Mean of `key` over the `window` records ending at G-step `end_step`.
double moving_average(const std::vector<StepRecord>& history, const std::string& key,
                      std::int64_t end_step, int window = 10);

/// File name of the rolling checkpoint for a model kind.
std::string checkpoint_file_name(const std::string& kind);

}  // namespace layercomp
