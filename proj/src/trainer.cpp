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
#include "layercomp/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include <torch/torch.h>

#include "layercomp/error.hpp"
#include "layercomp/nets/networks.hpp"
#include "layercomp/nets/roi.hpp"
#include "layercomp/nets/tensors.hpp"
#include "layercomp/rng.hpp"

namespace layercomp {

// ---- configuration -----------------------------------------------------------

TrainConfig TrainConfig::desk(int image_size, int n_classes, std::int64_t g_steps) {
  TrainConfig c;
  c.batch = 6;
  c.net = NetConfig::desk(image_size, n_classes);
  c.max_g_steps = g_steps;
  c.snapshot_every = 0;
  c.log_every = 10;
  return c;
}

void TrainConfig::validate() const {
  require(epochs >= 1 && batch >= 1 && lr0 > 0.0 && lr_halving_period >= 1 && d_steps_per_g >= 1,
          ErrorCode::kConfig, "training counts and rates must be positive");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, ErrorCode::kConfig,
          "Adam betas must lie in [0, 1)");
  require(max_g_steps >= 0 && snapshot_every >= 0 && log_every >= 1, ErrorCode::kConfig,
          "invalid run-control values");
  weights.validate();
  net.validate();
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch", batch},
          {"lr0", lr0},
          {"betas", {beta1, beta2}},
          {"lr_halving_period", lr_halving_period},
          {"d_steps_per_g", d_steps_per_g},
          {"seed", seed},
          {"loss_weights", weights.to_json()},
          {"net", net.to_json()},
          {"max_g_steps", max_g_steps},
          {"snapshot_every", snapshot_every},
          {"log_every", log_every},
          {"deterministic", deterministic}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& doc) {
  require(doc.is_object(), ErrorCode::kConfig, "training config must be a JSON object");
  TrainConfig c;
  try {
    c.epochs = doc.value("epochs", c.epochs);
    c.batch = doc.value("batch", c.batch);
    c.lr0 = doc.value("lr0", c.lr0);
    if (doc.contains("betas")) {
      const auto& b = doc.at("betas");
      require(b.is_array() && b.size() == 2, ErrorCode::kConfig, "betas must be a pair");
      c.beta1 = b[0].get<double>();
      c.beta2 = b[1].get<double>();
    }
    c.lr_halving_period = doc.value("lr_halving_period", c.lr_halving_period);
    c.d_steps_per_g = doc.value("d_steps_per_g", c.d_steps_per_g);
    c.seed = doc.value("seed", c.seed);
    if (doc.contains("loss_weights")) c.weights = LossWeights::from_json(doc.at("loss_weights"));
    if (doc.contains("net")) c.net = NetConfig::from_json(doc.at("net"));
    c.max_g_steps = doc.value("max_g_steps", c.max_g_steps);
    c.snapshot_every = doc.value("snapshot_every", c.snapshot_every);
    c.log_every = doc.value("log_every", c.log_every);
    c.deterministic = doc.value("deterministic", c.deterministic);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, std::string("bad training config: ") + e.what());
  }
  c.validate();
  return c;
}

std::int64_t TrainConfig::steps_per_epoch(int dataset_size) const {
  return std::max<std::int64_t>(1, (dataset_size + batch - 1) / batch);
}

std::int64_t TrainConfig::total_g_steps(int dataset_size) const {
  const std::int64_t full = steps_per_epoch(dataset_size) * epochs;
  return max_g_steps > 0 ? std::min(full, max_g_steps) : full;
}

double lr_schedule(const TrainConfig& config, int epoch) {
  require(epoch >= 0, ErrorCode::kInvalidInput, "epoch must be non-negative");
  return std::ldexp(config.lr0, -(epoch / config.lr_halving_period));
}

// ---- bookkeeping ---------------------------------------------------------------

UpdateRatioCounter::UpdateRatioCounter(int ratio) : ratio_(ratio) {
  require(ratio >= 1, ErrorCode::kConfig, "update ratio must be at least 1");
}

void UpdateRatioCounter::begin_d_step() {
  const std::int64_t k = d_steps_ - ratio_ * g_steps_;
  require(k >= 0 && k < ratio_, ErrorCode::kContract, "too many discriminator updates");
}

void UpdateRatioCounter::end_d_step() { ++d_steps_; }

void UpdateRatioCounter::end_g_step() {
  ++g_steps_;
  require(d_steps_ == ratio_ * g_steps_, ErrorCode::kContract,
          "generator updated before its discriminator updates");
}

void UpdateRatioCounter::restore(std::int64_t g_steps, std::int64_t d_steps) {
  require(d_steps == ratio_ * g_steps, ErrorCode::kCheckpoint, "inconsistent step counters");
  g_steps_ = g_steps;
  d_steps_ = d_steps;
}

bool UpdateRatioCounter::holds() const {
  const std::int64_t k = d_steps_ - ratio_ * g_steps_;
  return k >= 0 && k <= ratio_;
}

DivergenceGuard::DivergenceGuard(double d_limit, int patience)
    : d_limit_(d_limit), patience_(patience) {}

std::optional<std::string> DivergenceGuard::observe(const LossRecord& losses, double d_loss) {
  for (const auto& [name, value] : losses) {
    if (!std::isfinite(value)) return "non-finite loss '" + name + "'";
  }
  if (!std::isfinite(d_loss)) return "non-finite discriminator loss";
  over_limit_ = std::abs(d_loss) > d_limit_ ? over_limit_ + 1 : 0;
  if (over_limit_ >= patience_) {
    return "discriminator loss above " + std::to_string(d_limit_) + " for " +
           std::to_string(patience_) + " consecutive steps";
  }
  return std::nullopt;
}

nlohmann::json StepRecord::to_json() const {
  return {{"step", step}, {"d_steps", d_steps}, {"epoch", epoch},
          {"lr", lr},     {"losses", losses},   {"wallclock", wallclock}};
}

double moving_average(const std::vector<StepRecord>& history, const std::string& key,
                      std::int64_t end_step, int window) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : history) {
    if (r.step > end_step || r.step <= end_step - window) continue;
    auto it = r.losses.find(key);
    if (it == r.losses.end()) continue;
    sum += it->second;
    ++n;
  }
  require(n > 0, ErrorCode::kInvalidInput, "no records for '" + key + "' in the window");
  return sum / n;
}

std::string checkpoint_file_name(const std::string& kind) { return kind + ".lcc"; }

namespace {

// ---- tensors prepared once per run -----------------------------------------------

struct InstanceRef {
  int class_id = 0;
  BBox box;
};

struct TrainingTensors {
  int size = 0;
  int n_classes = 0;
  torch::Tensor images;  // (n, 3, H, W)
  torch::Tensor m_agg;   // (n, N, H, W)
  torch::Tensor occ;     // (n, 1, H, W)
  std::vector<torch::Tensor> planes;  // per image: (T_i, 1, H, W)
  std::vector<std::vector<InstanceRef>> instances;
  std::vector<int> usable;  // images with at least one instance
};

TrainingTensors prepare(const DatasetIndex& index, const NetConfig& net) {
  require(!index.empty(), ErrorCode::kInvalidInput, "dataset is empty");
  require(index.image_size() == net.image_size, ErrorCode::kConfig,
          "dataset image size does not match the network config");
  require(index.palette().size() == net.n_classes, ErrorCode::kConfig,
          "dataset class count does not match the network config");
  TrainingTensors t;
  t.size = net.image_size;
  t.n_classes = net.n_classes;
  const int n = index.size();
  std::vector<torch::Tensor> images, maps, occs;
  for (int i = 0; i < n; ++i) {
    const auto& layout = index.record(i).layout;
    images.push_back(to_tensor(index.image(i)));
    std::vector<InstanceRef> refs;
    std::vector<torch::Tensor> planes;
    if (layout.empty()) {
      maps.push_back(torch::zeros({net.n_classes, t.size, t.size}));
      occs.push_back(torch::zeros({1, t.size, t.size}));
    } else {
      const auto agg = aggregate(layout);
      maps.push_back(to_tensor(agg));
      occs.push_back(to_tensor(aggregate_occupancy(agg)));
      for (const auto& inst : layout.instances()) {
        refs.push_back({inst.class_id(), bbox_of(inst.plane())});
        planes.push_back(to_tensor(inst.plane()));
      }
      t.usable.push_back(i);
    }
    t.instances.push_back(std::move(refs));
    t.planes.push_back(planes.empty() ? torch::zeros({0, 1, t.size, t.size}) : torch::stack(planes));
  }
  t.images = torch::stack(images);
  t.m_agg = torch::stack(maps);
  t.occ = torch::stack(occs);
  return t;
}

torch::Tensor draw_noise(Rng& rng, int batch, int dim) {
  auto z = torch::empty({batch, dim});
  auto acc = z.accessor<float, 2>();
  for (int b = 0; b < batch; ++b)
    for (int k = 0; k < dim; ++k) acc[b][k] = static_cast<float>(rng.normal());
  return z;
}

torch::Tensor draw_images(Rng& rng, int batch, int n) {
  auto idx = torch::empty({batch}, torch::kLong);
  for (int b = 0; b < batch; ++b) idx[b] = static_cast<int64_t>(rng.below(static_cast<std::uint64_t>(n)));
  return idx;
}

struct ObjectBatch {
  torch::Tensor images;     // (B, 3, H, W)
  torch::Tensor m_agg;      // (B, N, H, W)
  torch::Tensor mask;       // (B, N, H, W), picked instance
  torch::Tensor occ;        // (B, 1, H, W), picked instance
  torch::Tensor box_occ;    // (B, 1, H, W)
  torch::Tensor onehot;     // (B, N)
  std::vector<BBox> boxes;
};

// Same draw order as sample_fg_batch: an image, then one of its instances.
ObjectBatch draw_objects(const TrainingTensors& t, Rng& rng, int batch) {
  require(!t.usable.empty(), ErrorCode::kInvalidInput, "dataset has no foreground instances");
  ObjectBatch out;
  auto idx = torch::empty({batch}, torch::kLong);
  out.mask = torch::zeros({batch, t.n_classes, t.size, t.size});
  out.occ = torch::zeros({batch, 1, t.size, t.size});
  out.box_occ = torch::zeros({batch, 1, t.size, t.size});
  out.onehot = torch::zeros({batch, t.n_classes});
  for (int b = 0; b < batch; ++b) {
    const int r = t.usable[rng.below(t.usable.size())];
    const auto& refs = t.instances[r];
    const int k = static_cast<int>(rng.below(refs.size()));
    idx[b] = r;
    const auto plane = t.planes[r][k];
    out.occ[b].copy_(plane);
    out.mask[b][refs[k].class_id].copy_(plane[0]);
    out.onehot[b][refs[k].class_id] = 1.0f;
    const BBox& box = refs[k].box;
    out.box_occ[b]
        .slice(1, box.row_min, box.row_max + 1)
        .slice(2, box.col_min, box.col_max + 1)
        .fill_(1.0f);
    out.boxes.push_back(box);
  }
  out.images = t.images.index_select(0, idx);
  out.m_agg = t.m_agg.index_select(0, idx);
  return out;
}

double scalar(const torch::Tensor& t) { return t.item<double>(); }

// Real and fake halves go through the discriminator as one batch.
torch::Tensor paired_d_loss(const torch::Tensor& scores) {
  const auto half = scores.size(0) / 2;
  return adv_loss_d(scores.slice(0, 0, half), scores.slice(0, half));
}

std::vector<BBox> twice(const std::vector<BBox>& boxes) {
  std::vector<BBox> out = boxes;
  out.insert(out.end(), boxes.begin(), boxes.end());
  return out;
}

// ---- optimizer state ----------------------------------------------------------------

torch::optim::Adam make_adam(torch::nn::Module& module, const TrainConfig& c) {
  return torch::optim::Adam(module.parameters(),
                            torch::optim::AdamOptions(c.lr0).betas({c.beta1, c.beta2}));
}

void set_lr(torch::optim::Adam& opt, double lr) {
  for (auto& group : opt.param_groups()) static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
}

void append_adam_state(torch::optim::Adam& opt, const std::string& prefix, NamedTensors& out) {
  const auto& params = opt.param_groups().at(0).params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto it = opt.state().find(params[i].unsafeGetTensorImpl());
    if (it == opt.state().end()) continue;
    const auto& s = static_cast<const torch::optim::AdamParamState&>(*it->second);
    const std::string base = prefix + std::to_string(i) + ".";
    out.emplace_back(base + "exp_avg", s.exp_avg().detach().clone());
    out.emplace_back(base + "exp_avg_sq", s.exp_avg_sq().detach().clone());
    out.emplace_back(base + "step", torch::full({1}, static_cast<float>(s.step())));
  }
}

void restore_adam_state(torch::optim::Adam& opt, const std::string& prefix, const ModelCheckpoint& ckpt) {
  const auto& params = opt.param_groups().at(0).params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string base = prefix + std::to_string(i) + ".";
    if (!ckpt.has(base + "step")) continue;
    auto state = std::make_unique<torch::optim::AdamParamState>();
    state->step(static_cast<int64_t>(ckpt.tensor(base + "step").item<float>()));
    auto avg = ckpt.tensor(base + "exp_avg");
    auto avg_sq = ckpt.tensor(base + "exp_avg_sq");
    require(avg.sizes() == params[i].sizes() && avg_sq.sizes() == params[i].sizes(),
            ErrorCode::kCheckpoint, "optimizer state shape mismatch");
    state->exp_avg(avg.clone());
    state->exp_avg_sq(avg_sq.clone());
    opt.state()[params[i].unsafeGetTensorImpl()] = std::move(state);
  }
}

// ---- tasks ------------------------------------------------------------------------------

/// One adversarial model family: its modules, optimizers and update rules.
class Task {
 public:
  virtual ~Task() = default;
  virtual std::string kind() const = 0;
  /// Returns the discriminator losses of one D-update.
  virtual LossRecord d_step(Rng& rng) = 0;
  virtual LossRecord g_step(Rng& rng) = 0;
  virtual void set_lr(double lr) = 0;
  virtual NamedTensors state() = 0;
  virtual void restore(const ModelCheckpoint& ckpt) = 0;
};

class BackgroundTask final : public Task {
 public:
  BackgroundTask(const TrainingTensors& data, const TrainConfig& c)
      : data_(data), c_(c), g_(c.net), d_(make_image_discriminator(c.net)),
        opt_g_(make_adam(*g_, c)), opt_d_(make_adam(*d_, c)) {}

  std::string kind() const override { return "background"; }

  LossRecord d_step(Rng& rng) override {
    const auto idx = draw_images(rng, c_.batch, static_cast<int>(data_.images.size(0)));
    const auto x = data_.images.index_select(0, idx);
    const auto m = data_.m_agg.index_select(0, idx);
    const auto z = draw_noise(rng, c_.batch, c_.net.z_dim);
    torch::Tensor fake;
    {
      torch::NoGradGuard no_grad;
      fake = g_->scene(z, m);
    }
    const auto loss =
        paired_d_loss(disc_global_forward(d_, torch::cat({x, fake}), torch::cat({m, m})).score);
    opt_d_.zero_grad();
    loss.backward();
    opt_d_.step();
    return {{"d", scalar(loss)}};
  }

  LossRecord g_step(Rng& rng) override {
    const auto idx = draw_images(rng, c_.batch, static_cast<int>(data_.images.size(0)));
    const auto x = data_.images.index_select(0, idx);
    const auto m = data_.m_agg.index_select(0, idx);
    const auto occ = data_.occ.index_select(0, idx);
    const auto z = draw_noise(rng, c_.batch, c_.net.z_dim);
    auto out = g_->forward(z, m);
    const auto rec = masked_l2(out.background, x, occ);
    auto fake = disc_global_forward(d_, out.scene, m);
    std::vector<torch::Tensor> real_features;
    {
      torch::NoGradGuard no_grad;
      real_features = disc_global_forward(d_, x, m).features;
    }
    const auto adv = adv_loss_g(fake.score);
    const auto fm = feature_matching(real_features, fake.features);
    const auto total = bg_total(adv, rec, fm, c_.weights);
    opt_g_.zero_grad();
    total.backward();
    opt_g_.step();
    return {{"adv", scalar(adv)}, {"rec", scalar(rec)}, {"fm", scalar(fm)}, {"total", scalar(total)}};
  }

  void set_lr(double lr) override {
    layercomp::set_lr(opt_g_, lr);
    layercomp::set_lr(opt_d_, lr);
  }

  NamedTensors state() override {
    auto out = module_state(*g_, "g.");
    for (auto& e : module_state(*d_, "d.")) out.push_back(std::move(e));
    append_adam_state(opt_g_, "opt_g.", out);
    append_adam_state(opt_d_, "opt_d.", out);
    return out;
  }

  void restore(const ModelCheckpoint& ckpt) override {
    load_module_state(*g_, ckpt, "g.");
    load_module_state(*d_, ckpt, "d.");
    restore_adam_state(opt_g_, "opt_g.", ckpt);
    restore_adam_state(opt_d_, "opt_d.", ckpt);
  }

 private:
  const TrainingTensors& data_;
  const TrainConfig& c_;
  BackgroundGenerator g_;
  Discriminator d_;
  torch::optim::Adam opt_g_, opt_d_;
};

class ForegroundTask final : public Task {
 public:
  ForegroundTask(const TrainingTensors& data, const TrainConfig& c)
      : data_(data), c_(c), g_(c.net), d_global_(make_image_discriminator(c.net)),
        d_local_(make_image_discriminator(c.net)), opt_g_(make_adam(*g_, c)),
        opt_global_(make_adam(*d_global_, c)), opt_local_(make_adam(*d_local_, c)) {}

  std::string kind() const override { return "foreground"; }

  LossRecord d_step(Rng& rng) override {
    const auto b = draw_objects(data_, rng, c_.batch);
    const auto z = draw_noise(rng, c_.batch, c_.net.z_dim);
    torch::Tensor fake;
    {
      torch::NoGradGuard no_grad;
      fake = generate(b, z);
    }
    const auto images = torch::cat({b.images, fake});
    const auto maps = torch::cat({b.m_agg, b.m_agg});
    const auto global = paired_d_loss(disc_global_forward(d_global_, images, maps).score);
    const auto local = paired_d_loss(local_forward(images, maps, twice(b.boxes)).score);
    opt_global_.zero_grad();
    opt_local_.zero_grad();
    (global + local).backward();
    opt_global_.step();
    opt_local_.step();
    return {{"d", scalar(global) + scalar(local)}, {"d_global", scalar(global)}, {"d_local", scalar(local)}};
  }

  LossRecord g_step(Rng& rng) override {
    const auto b = draw_objects(data_, rng, c_.batch);
    const auto z = draw_noise(rng, c_.batch, c_.net.z_dim);
    const auto fake = generate(b, z);
    auto global_out = disc_global_forward(d_global_, fake, b.m_agg);
    auto local_out = local_forward(fake, b.m_agg, b.boxes);
    std::vector<torch::Tensor> real_features;
    {
      torch::NoGradGuard no_grad;
      real_features = disc_global_forward(d_global_, b.images, b.m_agg).features;
    }
    const auto global = adv_loss_g(global_out.score);
    const auto local = adv_loss_g(local_out.score);
    const auto rec = fg_rec_loss(fake, b.images, b.box_occ);
    const auto fm = feature_matching(real_features, global_out.features);
    const auto total = fg_total(global, local, rec, fm, c_.weights);
    opt_g_.zero_grad();
    total.backward();
    opt_g_.step();
    return {{"global", scalar(global)}, {"local", scalar(local)}, {"rec", scalar(rec)},
            {"fm", scalar(fm)},         {"total", scalar(total)}, {"local_crop", double(last_crop_)}};
  }

  void set_lr(double lr) override {
    layercomp::set_lr(opt_g_, lr);
    layercomp::set_lr(opt_global_, lr);
    layercomp::set_lr(opt_local_, lr);
  }

  NamedTensors state() override {
    auto out = module_state(*g_, "g.");
    for (auto& e : module_state(*d_global_, "d_global.")) out.push_back(std::move(e));
    for (auto& e : module_state(*d_local_, "d_local.")) out.push_back(std::move(e));
    append_adam_state(opt_g_, "opt_g.", out);
    append_adam_state(opt_global_, "opt_d_global.", out);
    append_adam_state(opt_local_, "opt_d_local.", out);
    return out;
  }

  void restore(const ModelCheckpoint& ckpt) override {
    load_module_state(*g_, ckpt, "g.");
    load_module_state(*d_global_, ckpt, "d_global.");
    load_module_state(*d_local_, ckpt, "d_local.");
    restore_adam_state(opt_g_, "opt_g.", ckpt);
    restore_adam_state(opt_global_, "opt_d_global.", ckpt);
    restore_adam_state(opt_local_, "opt_d_local.", ckpt);
  }

 private:
  torch::Tensor generate(const ObjectBatch& b, const torch::Tensor& z) {
    return g_->forward(b.images * (1.0 - b.occ), b.mask, z);
  }

  DiscriminatorOutput local_forward(const torch::Tensor& image, const torch::Tensor& m_agg,
                                    const std::vector<BBox>& boxes) {
    const int64_t crop = c_.net.crop_size();
    auto x = bilinear_roi(image, boxes, crop, crop);
    auto m = bilinear_roi(m_agg, boxes, crop, crop);
    require(x.size(2) == c_.net.image_size && x.size(3) == c_.net.image_size, ErrorCode::kContract,
            "local discriminator crops must match the image size");
    last_crop_ = x.size(2);
    return d_local_->forward(torch::cat({x, m}, 1));
  }

  const TrainingTensors& data_;
  const TrainConfig& c_;
  ForegroundGenerator g_;
  Discriminator d_global_, d_local_;
  torch::optim::Adam opt_g_, opt_global_, opt_local_;
  int64_t last_crop_ = 0;
};

class MaskTask final : public Task {
 public:
  MaskTask(const TrainingTensors& data, const TrainConfig& c)
      : data_(data), c_(c), g_(c.net), d_(make_mask_discriminator(c.net)),
        opt_g_(make_adam(*g_, c)), opt_d_(make_adam(*d_, c)) {}

  std::string kind() const override { return "mask"; }

  LossRecord d_step(Rng& rng) override {
    const auto b = draw_objects(data_, rng, c_.batch);
    const auto z = draw_noise(rng, c_.batch, c_.net.z_dim);
    torch::Tensor fake;
    {
      torch::NoGradGuard no_grad;
      fake = g_->full_frame(b.onehot, b.boxes, z);
    }
    const auto loss = paired_d_loss(
        crop_forward(torch::cat({b.occ, fake}), torch::cat({b.onehot, b.onehot}), twice(b.boxes)).score);
    opt_d_.zero_grad();
    loss.backward();
    opt_d_.step();
    return {{"d", scalar(loss)}};
  }

  LossRecord g_step(Rng& rng) override {
    const auto b = draw_objects(data_, rng, c_.batch);
    const auto z = draw_noise(rng, c_.batch, c_.net.z_dim);
    const auto probs = g_->full_frame(b.onehot, b.boxes, z);
    const auto adv = adv_loss_g(crop_forward(probs, b.onehot, b.boxes).score);
    const auto loss = mask_gen_loss(probs, b.occ, b.box_occ, adv, c_.weights);
    opt_g_.zero_grad();
    loss.total.backward();
    opt_g_.step();
    return {{"ce", scalar(loss.cross_entropy)}, {"adv", scalar(adv)}, {"total", scalar(loss.total)}};
  }

  void set_lr(double lr) override {
    layercomp::set_lr(opt_g_, lr);
    layercomp::set_lr(opt_d_, lr);
  }

  NamedTensors state() override {
    auto out = module_state(*g_, "g.");
    for (auto& e : module_state(*d_, "d.")) out.push_back(std::move(e));
    append_adam_state(opt_g_, "opt_g.", out);
    append_adam_state(opt_d_, "opt_d.", out);
    return out;
  }

  void restore(const ModelCheckpoint& ckpt) override {
    load_module_state(*g_, ckpt, "g.");
    load_module_state(*d_, ckpt, "d.");
    restore_adam_state(opt_g_, "opt_g.", ckpt);
    restore_adam_state(opt_d_, "opt_d.", ckpt);
  }

 private:
  // Mask crops at the generator's working resolution, conditioned on class maps.
  DiscriminatorOutput crop_forward(const torch::Tensor& mask, const torch::Tensor& onehot,
                                   const std::vector<BBox>& boxes) {
    const int64_t s = c_.net.mask_crop_size;
    auto crop = bilinear_roi(mask, boxes, s, s);
    auto cls = tile_vector(onehot, s, s);
    return d_->forward(torch::cat({crop, cls}, 1));
  }

  const TrainingTensors& data_;
  const TrainConfig& c_;
  MaskGenerator g_;
  Discriminator d_;
  torch::optim::Adam opt_g_, opt_d_;
};

// ---- the loop ------------------------------------------------------------------------------

ModelCheckpoint snapshot(Task& task, const TrainConfig& c, const UpdateRatioCounter& counter,
                         const Rng& rng) {
  ModelCheckpoint ckpt;
  ckpt.kind = task.kind();
  ckpt.config = c.net;
  ckpt.step = counter.g_steps();
  ckpt.tensors = task.state();
  ckpt.extra = {{"train_config", c.to_json()},
                {"g_steps", counter.g_steps()},
                {"d_steps", counter.d_steps()},
                {"rng", rng.serialize()}};
  return ckpt;
}

TrainResult run(Task& task, int dataset_size, const TrainConfig& c, const TrainOptions& options) {
  UpdateRatioCounter counter(c.d_steps_per_g);
  Rng rng(derive_seed(c.seed, 0x7472));
  if (options.resume) {
    const auto ckpt = load_checkpoint(*options.resume);
    require(ckpt.kind == task.kind(), ErrorCode::kCheckpoint,
            "cannot resume " + task.kind() + " training from a " + ckpt.kind + " checkpoint");
    require(ckpt.config == c.net, ErrorCode::kVersion, "resume checkpoint uses a different network config");
    task.restore(ckpt);
    counter.restore(ckpt.extra.at("g_steps").get<std::int64_t>(),
                    ckpt.extra.at("d_steps").get<std::int64_t>());
    rng.deserialize(ckpt.extra.at("rng").get<std::string>());
  }

  std::ofstream log;
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    log.open(options.out_dir / (task.kind() + "_log.jsonl"), std::ios::app);
    require(log.good(), ErrorCode::kIo, "cannot open the training log");
  }

  TrainResult result;
  const auto write = [&](const ModelCheckpoint& ckpt, const std::string& name) {
    if (options.out_dir.empty()) return;
    const auto path = options.out_dir / name;
    save_checkpoint(ckpt, path);
    result.written.push_back(path);
  };

  const auto per_epoch = c.steps_per_epoch(dataset_size);
  const auto total = c.total_g_steps(dataset_size);
  const auto start = std::chrono::steady_clock::now();
  DivergenceGuard guard;
  ModelCheckpoint last_good = snapshot(task, c, counter, rng);

  while (counter.g_steps() < total) {
    const int epoch = static_cast<int>(counter.g_steps() / per_epoch);
    const double lr = lr_schedule(c, epoch);
    task.set_lr(lr);
    LossRecord losses;
    for (int k = 0; k < c.d_steps_per_g; ++k) {
      counter.begin_d_step();
      const auto d = task.d_step(rng);
      counter.end_d_step();
      for (const auto& [name, v] : d) losses[name] = v;  // last D-step of the round
    }
    for (const auto& [name, v] : task.g_step(rng)) losses[name] = v;
    counter.end_g_step();

    StepRecord rec;
    rec.step = counter.g_steps();
    rec.d_steps = counter.d_steps();
    rec.epoch = epoch;
    rec.lr = lr;
    rec.losses = losses;
    rec.wallclock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back(rec);
    if (log.is_open() && (rec.step % c.log_every == 0 || rec.step == total)) {
      log << rec.to_json().dump() << '\n';
      log.flush();
    }
    if (options.on_step) options.on_step(rec);

    if (auto reason = guard.observe(losses, losses.at("d"))) {
      result.diverged = true;
      result.divergence_report = "diverged at G-step " + std::to_string(rec.step) + ": " + *reason +
                                 "; last good checkpoint is from G-step " +
                                 std::to_string(last_good.step);
      if (log.is_open()) log << nlohmann::json{{"divergence", result.divergence_report}}.dump() << '\n';
      result.checkpoint = std::move(last_good);
      result.g_steps = counter.g_steps();
      result.d_steps = counter.d_steps();
      return result;
    }

    const bool epoch_end = rec.step % per_epoch == 0;
    if (epoch_end || rec.step == total) {
      last_good = snapshot(task, c, counter, rng);
      write(last_good, checkpoint_file_name(task.kind()));
      const int finished = static_cast<int>(rec.step / per_epoch);
      if (epoch_end && c.snapshot_every > 0 && finished % c.snapshot_every == 0) {
        char name[64];
        std::snprintf(name, sizeof name, "%s_epoch%04d.lcc", task.kind().c_str(), finished);
        write(last_good, name);
      }
    }
  }
  result.checkpoint = std::move(last_good);
  result.g_steps = counter.g_steps();
  result.d_steps = counter.d_steps();
  return result;
}

template <typename T>
TrainResult train(const DatasetIndex& index, const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  if (config.deterministic) torch::set_num_threads(1);
  torch::manual_seed(config.seed);
  const auto data = prepare(index, config.net);
  T task(data, config);
  return run(task, index.size(), config, options);
}

}  // namespace

TrainResult train_bg(const DatasetIndex& index, const TrainConfig& config, const TrainOptions& options) {
  return train<BackgroundTask>(index, config, options);
}

TrainResult train_fg(const DatasetIndex& index, const TrainConfig& config, const TrainOptions& options) {
  return train<ForegroundTask>(index, config, options);
}

TrainResult train_mask_gen(const DatasetIndex& index, const TrainConfig& config,
                           const TrainOptions& options) {
  return train<MaskTask>(index, config, options);
}

}  // namespace layercomp
