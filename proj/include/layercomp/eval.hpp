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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "layercomp/canvas.hpp"
#include "layercomp/dataset.hpp"
#include "layercomp/layout.hpp"
#include "layercomp/nets/checkpoint.hpp"
#include "layercomp/nets/inference.hpp"

namespace layercomp {

// ---- Frechet distance ------------------------------------------------------------

struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  int dim() const { return static_cast<int>(mean.size()); }
};

/// Sample mean and unbiased (n - 1) covariance of the rows of `features`.
GaussianStats fit_gaussian(const Eigen::MatrixXd& features);

/// R with R * R = a * b for symmetric PSD a, b, computed as
/// S * sqrt(S b S) * S^+ where S = sqrt(a). Negative eigenvalues are clamped
/// to zero; kNumerical when an input is not PSD within tolerance.
Eigen::MatrixXd product_sqrt(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// |mu_a - mu_b|^2 + Tr(a + b - 2 (a b)^{1/2}).
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

// ---- feature providers -------------------------------------------------------------

class FeatureProvider {
 public:
  virtual ~FeatureProvider() = default;
  virtual std::string name() const = 0;
  /// "external-pretrained", "trained-on-synthetic" or "random-projection".
  virtual std::string kind() const = 0;
  virtual int dim() const = 0;
  /// One row per image.
  virtual Eigen::MatrixXd features(const std::vector<Canvas>& images) const = 0;
  virtual nlohmann::json describe() const;
};

/// Fixed random projection of 4x4-pooled pixels followed by tanh. Needs no
/// training; weights are a function of the seed.
class RandomProjectionFeatures final : public FeatureProvider {
 public:
  explicit RandomProjectionFeatures(int dim = 64, std::uint64_t seed = 0);
  std::string name() const override { return "random-projection"; }
  std::string kind() const override { return "random-projection"; }
  int dim() const override { return dim_; }
  Eigen::MatrixXd features(const std::vector<Canvas>& images) const override;
  nlohmann::json describe() const override;

 private:
  int dim_;
  std::uint64_t seed_;
};

struct EvalNetConfig {
  int image_size = 64;
  int n_classes = 3;
  int width = 16;        // base channel count
  int feature_dim = 64;  // classifier embedding size
  nlohmann::json to_json() const;
  static EvalNetConfig from_json(const nlohmann::json& doc);
};

/// Embedding of a small CNN trained to predict which classes appear in an
/// image. Weights live in a "classifier" checkpoint.
class ClassifierFeatures final : public FeatureProvider {
 public:
  explicit ClassifierFeatures(const ModelCheckpoint& ckpt);
  ~ClassifierFeatures() override;
  std::string name() const override { return "synthetic-classifier"; }
  std::string kind() const override { return "trained-on-synthetic"; }
  int dim() const override;
  Eigen::MatrixXd features(const std::vector<Canvas>& images) const override;
  nlohmann::json describe() const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct EvalTrainOptions {
  int steps = 300;
  int batch = 16;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

ModelCheckpoint train_feature_classifier(const DatasetIndex& index, const EvalTrainOptions& options);

std::unique_ptr<FeatureProvider> make_feature_provider(const std::string& name,
                                                       const std::optional<ModelCheckpoint>& ckpt);

/// Extracts features for both sets, fits Gaussians and returns their
/// Frechet distance.
double fid(const std::vector<Canvas>& real, const std::vector<Canvas>& fake,
           const FeatureProvider& provider);

// ---- segmentation ------------------------------------------------------------------

class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual std::string name() const = 0;
  virtual std::string kind() const = 0;
  virtual int n_classes() const = 0;
  /// Per-pixel labels, row-major: 0 = background, class_id + 1 otherwise.
  virtual std::vector<std::int32_t> segment(const Canvas& image) const = 0;
  virtual nlohmann::json describe() const;
};

/// Small fully convolutional network trained on synthetic layouts.
class FcnSegmenter final : public Segmenter {
 public:
  explicit FcnSegmenter(const ModelCheckpoint& ckpt);
  ~FcnSegmenter() override;
  std::string name() const override { return "synthetic-fcn"; }
  std::string kind() const override { return "trained-on-synthetic"; }
  int n_classes() const override;
  std::vector<std::int32_t> segment(const Canvas& image) const override;
  nlohmann::json describe() const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

ModelCheckpoint train_segmenter(const DatasetIndex& index, const EvalTrainOptions& options);

struct IouResult {
  std::vector<std::optional<double>> per_class;  // empty when a class never occurs
  double mean = 0.0;  // over classes present in the ground truth

  nlohmann::json to_json() const;
};

/// Class IoU pooled over the whole set; background is excluded and classes
/// absent from the ground truth do not enter the mean. kInvalidInput when
/// the ground truth has no foreground at all.
IouResult mean_iou(const std::vector<std::vector<std::int32_t>>& predicted,
                   const std::vector<SemanticLayout>& ground_truth);

// ---- protocol -------------------------------------------------------------------------

struct EvalReport {
  double fid = 0.0;
  IouResult iou_train;
  std::optional<IouResult> iou_val;
  int n_images = 0;
  std::uint64_t seed = 0;
  std::string mode;
  nlohmann::json provider;
  nlohmann::json segmenter;
  std::string config_hash;
  nlohmann::json checkpoints;

  nlohmann::json to_json() const;
};

struct EvalProtocolInputs {
  std::shared_ptr<GeneratorSet> generators;
  const DatasetIndex* train = nullptr;
  const DatasetIndex* val = nullptr;  // optional second layout source
  int n_images = 100;
  std::uint64_t seed = 0;
  const FeatureProvider* provider = nullptr;
  const Segmenter* segmenter = nullptr;
  bool hard_mode = true;
};

/// Composes n_images scenes from layouts drawn with replacement, then
/// reports FID against the real images and mean IoU of the segmenter on the
/// generated scenes.
EvalReport eval_protocol(const EvalProtocolInputs& inputs);

}  // namespace layercomp
