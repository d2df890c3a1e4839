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
#include <cmath>

#include <torch/torch.h>

#include "layercomp/error.hpp"
#include "layercomp/eval.hpp"
#include "layercomp/nets/tensors.hpp"
#include "layercomp/rng.hpp"

namespace layercomp {

namespace F = torch::nn::functional;

nlohmann::json FeatureProvider::describe() const {
  return {{"name", name()}, {"kind", kind()}, {"dim", dim()}};
}

nlohmann::json Segmenter::describe() const {
  return {{"name", name()}, {"kind", kind()}, {"n_classes", n_classes()}};
}

// ---- random projection ------------------------------------------------------------

RandomProjectionFeatures::RandomProjectionFeatures(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  require(dim >= 1, ErrorCode::kInvalidInput, "feature dimension must be positive");
}

Eigen::MatrixXd RandomProjectionFeatures::features(const std::vector<Canvas>& images) const {
  require(!images.empty(), ErrorCode::kInvalidInput, "no images");
  const int h = images.front().height(), w = images.front().width(), c = images.front().channels();
  const int ph = std::max(1, h / 4), pw = std::max(1, w / 4);
  const int in = ph * pw * c;
  Rng rng(derive_seed(seed_, static_cast<std::uint64_t>(in)));
  Eigen::MatrixXd proj(in, dim_);
  const double s = 1.0 / std::sqrt(static_cast<double>(in));
  for (int i = 0; i < in; ++i)
    for (int k = 0; k < dim_; ++k) proj(i, k) = s * rng.normal();

  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(images.size()), in);
  for (std::size_t n = 0; n < images.size(); ++n) {
    const auto& img = images[n];
    require(img.height() == h && img.width() == w && img.channels() == c, ErrorCode::kInvalidInput,
            "images differ in shape");
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        for (int ch = 0; ch < c; ++ch) {
          const int cell = ((std::min(i * ph / h, ph - 1)) * pw + std::min(j * pw / w, pw - 1)) * c + ch;
          pooled(static_cast<Eigen::Index>(n), cell) += img.at(i, j, ch);
        }
  }
  pooled /= static_cast<double>((h / ph) * (w / pw));
  return (2.0 * pooled * proj).array().tanh().matrix();
}

nlohmann::json RandomProjectionFeatures::describe() const {
  auto j = FeatureProvider::describe();
  j["seed"] = seed_;
  return j;
}

// ---- small eval networks ------------------------------------------------------------

nlohmann::json EvalNetConfig::to_json() const {
  return {{"image_size", image_size}, {"n_classes", n_classes}, {"width", width}, {"feature_dim", feature_dim}};
}

EvalNetConfig EvalNetConfig::from_json(const nlohmann::json& doc) {
  EvalNetConfig c;
  c.image_size = doc.value("image_size", c.image_size);
  c.n_classes = doc.value("n_classes", c.n_classes);
  c.width = doc.value("width", c.width);
  c.feature_dim = doc.value("feature_dim", c.feature_dim);
  require(c.image_size >= 8 && c.n_classes >= 1 && c.width >= 1 && c.feature_dim >= 1,
          ErrorCode::kConfig, "invalid eval network config");
  return c;
}

namespace {

torch::nn::Conv2d conv3(int64_t in, int64_t out, int64_t dilation = 1) {
  return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).padding(dilation).dilation(dilation));
}

class ClassifierNetImpl : public torch::nn::Module {
 public:
  explicit ClassifierNetImpl(const EvalNetConfig& c) {
    const int64_t w = c.width;
    c1 = register_module("c1", conv3(3, w));
    c2 = register_module("c2", conv3(w, 2 * w));
    c3 = register_module("c3", conv3(2 * w, 4 * w));
    c4 = register_module("c4", conv3(4 * w, 4 * w));
    embed = register_module("embed", torch::nn::Linear(4 * w, c.feature_dim));
    head = register_module("head", torch::nn::Linear(c.feature_dim, c.n_classes));
  }
  torch::Tensor embedding(const torch::Tensor& x) {
    auto h = F::avg_pool2d(torch::relu(c1(x)), F::AvgPool2dFuncOptions(2));
    h = F::avg_pool2d(torch::relu(c2(h)), F::AvgPool2dFuncOptions(2));
    h = F::avg_pool2d(torch::relu(c3(h)), F::AvgPool2dFuncOptions(2));
    h = torch::relu(c4(h)).mean({2, 3});
    return embed(h);
  }
  torch::Tensor forward(const torch::Tensor& x) { return head(torch::relu(embedding(x))); }

  torch::nn::Conv2d c1{nullptr}, c2{nullptr}, c3{nullptr}, c4{nullptr};
  torch::nn::Linear embed{nullptr}, head{nullptr};
};
TORCH_MODULE(ClassifierNet);

class SegmenterNetImpl : public torch::nn::Module {
 public:
  explicit SegmenterNetImpl(const EvalNetConfig& c) {
    const int64_t w = c.width;
    c1 = register_module("c1", conv3(3, w));
    c2 = register_module("c2", conv3(w, w, 2));
    c3 = register_module("c3", conv3(w, w, 4));
    out = register_module("out", torch::nn::Conv2d(torch::nn::Conv2dOptions(w, c.n_classes + 1, 1)));
  }
  torch::Tensor forward(const torch::Tensor& x) {
    auto h = torch::relu(c1(x));
    h = torch::relu(c2(h));
    h = torch::relu(c3(h));
    return out(h);
  }

  torch::nn::Conv2d c1{nullptr}, c2{nullptr}, c3{nullptr}, out{nullptr};
};
TORCH_MODULE(SegmenterNet);

EvalNetConfig eval_config_for(const DatasetIndex& index) {
  EvalNetConfig c;
  c.image_size = index.image_size();
  c.n_classes = index.palette().size();
  return c;
}

ModelCheckpoint eval_checkpoint(const std::string& kind, const EvalNetConfig& c, torch::nn::Module& net,
                                std::int64_t steps) {
  ModelCheckpoint ckpt;
  ckpt.kind = kind;
  ckpt.config = NetConfig::desk(c.image_size, c.n_classes);
  ckpt.step = steps;
  ckpt.extra = {{"eval_net", c.to_json()}};
  ckpt.tensors = module_state(net, "net.");
  return ckpt;
}

EvalNetConfig read_eval_config(const ModelCheckpoint& ckpt, const std::string& kind) {
  require(ckpt.kind == kind, ErrorCode::kCheckpoint, "expected a " + kind + " checkpoint");
  require(ckpt.extra.contains("eval_net"), ErrorCode::kCheckpoint, "checkpoint lacks its network config");
  return EvalNetConfig::from_json(ckpt.extra.at("eval_net"));
}

torch::Tensor batch_of(const std::vector<Canvas>& images, std::size_t begin, std::size_t end) {
  std::vector<torch::Tensor> parts;
  for (std::size_t i = begin; i < end; ++i) parts.push_back(to_tensor(images[i]));
  return torch::stack(parts);
}

}  // namespace

// ---- classifier features ------------------------------------------------------------

struct ClassifierFeatures::Impl {
  EvalNetConfig config;
  ClassifierNet net{nullptr};
  std::string fingerprint;
};

ClassifierFeatures::ClassifierFeatures(const ModelCheckpoint& ckpt) : impl_(std::make_unique<Impl>()) {
  impl_->config = read_eval_config(ckpt, "classifier");
  impl_->net = ClassifierNet(impl_->config);
  load_module_state(*impl_->net, ckpt, "net.");
  impl_->net->eval();
  impl_->fingerprint = ckpt.fingerprint();
}

ClassifierFeatures::~ClassifierFeatures() = default;

int ClassifierFeatures::dim() const { return impl_->config.feature_dim; }

Eigen::MatrixXd ClassifierFeatures::features(const std::vector<Canvas>& images) const {
  require(!images.empty(), ErrorCode::kInvalidInput, "no images");
  torch::NoGradGuard no_grad;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(images.size()), dim());
  for (std::size_t b = 0; b < images.size(); b += 64) {
    const std::size_t e = std::min(images.size(), b + 64);
    auto f = impl_->net->embedding(batch_of(images, b, e)).to(torch::kDouble).contiguous();
    auto acc = f.accessor<double, 2>();
    for (std::size_t i = b; i < e; ++i)
      for (int k = 0; k < dim(); ++k) out(static_cast<Eigen::Index>(i), k) = acc[static_cast<int64_t>(i - b)][k];
  }
  return out;
}

nlohmann::json ClassifierFeatures::describe() const {
  auto j = FeatureProvider::describe();
  j["checkpoint"] = impl_->fingerprint;
  return j;
}

ModelCheckpoint train_feature_classifier(const DatasetIndex& index, const EvalTrainOptions& options) {
  require(!index.empty(), ErrorCode::kInvalidInput, "dataset is empty");
  const auto c = eval_config_for(index);
  torch::manual_seed(options.seed);
  ClassifierNet net(c);
  torch::optim::Adam opt(net->parameters(), torch::optim::AdamOptions(options.lr));
  std::vector<torch::Tensor> images, targets;
  for (int i = 0; i < index.size(); ++i) {
    images.push_back(to_tensor(index.image(i)));
    auto t = torch::zeros({c.n_classes});
    for (const auto& inst : index.record(i).layout.instances()) t[inst.class_id()] = 1.0f;
    targets.push_back(t);
  }
  const auto all_x = torch::stack(images), all_y = torch::stack(targets);
  Rng rng(derive_seed(options.seed, 0xc1a5));
  for (int step = 0; step < options.steps; ++step) {
    auto idx = torch::empty({options.batch}, torch::kLong);
    for (int b = 0; b < options.batch; ++b) idx[b] = static_cast<int64_t>(rng.below(static_cast<std::uint64_t>(index.size())));
    const auto loss = F::binary_cross_entropy_with_logits(net->forward(all_x.index_select(0, idx)),
                                                          all_y.index_select(0, idx));
    opt.zero_grad();
    loss.backward();
    opt.step();
  }
  return eval_checkpoint("classifier", c, *net, options.steps);
}

std::unique_ptr<FeatureProvider> make_feature_provider(const std::string& name,
                                                       const std::optional<ModelCheckpoint>& ckpt) {
  if (name == "random-projection") return std::make_unique<RandomProjectionFeatures>();
  if (name == "synthetic-classifier" || name == "classifier") {
    require(ckpt.has_value(), ErrorCode::kConfig, "the classifier provider needs a checkpoint");
    return std::make_unique<ClassifierFeatures>(*ckpt);
  }
  fail(ErrorCode::kConfig, "unknown feature provider '" + name + "'");
}

// ---- segmenter ---------------------------------------------------------------------------

struct FcnSegmenter::Impl {
  EvalNetConfig config;
  SegmenterNet net{nullptr};
  std::string fingerprint;
};

FcnSegmenter::FcnSegmenter(const ModelCheckpoint& ckpt) : impl_(std::make_unique<Impl>()) {
  impl_->config = read_eval_config(ckpt, "segmenter");
  impl_->net = SegmenterNet(impl_->config);
  load_module_state(*impl_->net, ckpt, "net.");
  impl_->net->eval();
  impl_->fingerprint = ckpt.fingerprint();
}

FcnSegmenter::~FcnSegmenter() = default;

int FcnSegmenter::n_classes() const { return impl_->config.n_classes; }

std::vector<std::int32_t> FcnSegmenter::segment(const Canvas& image) const {
  torch::NoGradGuard no_grad;
  auto labels = impl_->net->forward(to_tensor(image).unsqueeze(0)).argmax(1).to(torch::kInt32).contiguous();
  const auto* p = labels.data_ptr<std::int32_t>();
  return std::vector<std::int32_t>(p, p + labels.numel());
}

nlohmann::json FcnSegmenter::describe() const {
  auto j = Segmenter::describe();
  j["checkpoint"] = impl_->fingerprint;
  return j;
}

ModelCheckpoint train_segmenter(const DatasetIndex& index, const EvalTrainOptions& options) {
  require(!index.empty(), ErrorCode::kInvalidInput, "dataset is empty");
  const auto c = eval_config_for(index);
  torch::manual_seed(options.seed);
  SegmenterNet net(c);
  torch::optim::Adam opt(net->parameters(), torch::optim::AdamOptions(options.lr));
  std::vector<torch::Tensor> images, labels;
  for (int i = 0; i < index.size(); ++i) {
    images.push_back(to_tensor(index.image(i)));
    const auto map = label_map(index.record(i).layout);
    labels.push_back(torch::tensor(std::vector<int64_t>(map.begin(), map.end())).view({c.image_size, c.image_size}));
  }
  const auto all_x = torch::stack(images), all_y = torch::stack(labels);
  Rng rng(derive_seed(options.seed, 0x5e6));
  for (int step = 0; step < options.steps; ++step) {
    auto idx = torch::empty({options.batch}, torch::kLong);
    for (int b = 0; b < options.batch; ++b) idx[b] = static_cast<int64_t>(rng.below(static_cast<std::uint64_t>(index.size())));
    const auto loss = F::cross_entropy(net->forward(all_x.index_select(0, idx)), all_y.index_select(0, idx));
    opt.zero_grad();
    loss.backward();
    opt.step();
  }
  return eval_checkpoint("segmenter", c, *net, options.steps);
}

}  // namespace layercomp
