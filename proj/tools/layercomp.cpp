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
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "layercomp/composer.hpp"
#include "layercomp/dataset.hpp"
#include "layercomp/error.hpp"
#include "layercomp/eval.hpp"
#include "layercomp/image_io.hpp"
#include "layercomp/nets/checkpoint.hpp"
#include "layercomp/nets/inference.hpp"
#include "layercomp/service.hpp"
#include "layercomp/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace layercomp;

namespace {

struct CheckpointArgs {
  std::string bg, fg, mask;

  void add_to(CLI::App* app, bool mask_option = true) {
    app->add_option("--bg-ckpt", bg, "background generator checkpoint")->required()->check(CLI::ExistingFile);
    app->add_option("--fg-ckpt", fg, "foreground generator checkpoint")->required()->check(CLI::ExistingFile);
    if (mask_option) app->add_option("--mask-ckpt", mask, "mask generator checkpoint")->check(CLI::ExistingFile);
  }
  std::shared_ptr<GeneratorSet> load() const {
    std::optional<fs::path> m;
    if (!mask.empty()) m = mask;
    return std::make_shared<GeneratorSet>(load_generators(bg, fg, m));
  }
};

/// `dir/split` when it exists, `dir` otherwise.
fs::path split_dir(const fs::path& dir, const std::string& split) {
  return fs::is_directory(dir / split) ? dir / split : dir;
}

std::vector<Canvas> load_image_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension().string();
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  require(!files.empty(), ErrorCode::kNotFound, "no images in " + dir.string());
  std::vector<Canvas> images;
  for (const auto& f : files) images.push_back(load_image(f));
  return images;
}

void print_json(const json& doc) { std::cout << doc.dump(2) << "\n"; }

// ---- data -----------------------------------------------------------------------

void add_synth(CLI::App& root) {
  auto* cmd = root.add_subcommand("synth-data", "generate the synthetic shapes dataset");
  static std::string out;
  static int n = 500, n_val = 100, size = 64, classes = 3;
  static std::uint64_t seed = 1;
  cmd->add_option("--out", out, "output directory (train/ and val/ are created)")->required();
  cmd->add_option("--n", n, "training images");
  cmd->add_option("--n-val", n_val, "validation images");
  cmd->add_option("--size", size, "image size");
  cmd->add_option("--classes", classes, "number of classes");
  cmd->add_option("--seed", seed, "random seed");
  cmd->callback([] {
    save_dataset(synth_dataset(n, size, classes, seed), fs::path(out) / "train");
    if (n_val > 0) save_dataset(synth_dataset(n_val, size, classes, derive_seed(seed, 0x76616c)), fs::path(out) / "val");
    print_json({{"train", n}, {"val", n_val}, {"size", size}, {"classes", classes}, {"out", out}});
  });
}

void add_ingest(CLI::App& root) {
  auto* cmd = root.add_subcommand("ingest", "convert COCO-style annotations into a dataset");
  static std::string annotations, images, out;
  static std::vector<std::string> classes;
  static int size = 64;
  cmd->add_option("--annotations", annotations, "annotation JSON")->required()->check(CLI::ExistingFile);
  cmd->add_option("--images", images, "image directory")->required()->check(CLI::ExistingDirectory);
  cmd->add_option("--classes", classes, "class names to keep")->required()->delimiter(',');
  cmd->add_option("--size", size, "output size");
  cmd->add_option("--out", out, "output directory")->required();
  cmd->callback([] {
    auto result = ingest_coco(annotations, images, classes, size);
    save_dataset(result.index, out);
    print_json({{"images", result.index.size()},
                {"missing_images", result.missing_images},
                {"dropped_instances", result.dropped_instances}});
  });
}

// ---- training ----------------------------------------------------------------------

void add_train(CLI::App& root, const std::string& name, const std::string& help,
               TrainResult (*train)(const DatasetIndex&, const TrainConfig&, const TrainOptions&)) {
  auto* cmd = root.add_subcommand(name, help);
  struct Args {
    std::string data, out, config, resume;
    std::int64_t steps = -1;
    int batch = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool quiet = false;
  };
  auto args = std::make_shared<Args>();
  cmd->add_option("--data", args->data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  cmd->add_option("--out", args->out, "output directory")->required();
  cmd->add_option("--config", args->config, "training config JSON (default: desk preset)")->check(CLI::ExistingFile);
  cmd->add_option("--steps", args->steps, "stop after this many G-steps (0 runs all epochs)");
  cmd->add_option("--batch", args->batch, "batch size");
  cmd->add_option("--seed", args->seed, "random seed");
  cmd->add_option("--resume", args->resume, "checkpoint to resume from")->check(CLI::ExistingFile);
  cmd->add_flag("--quiet", args->quiet, "no per-step output");
  cmd->callback([args, train, cmd] {
    const auto index = load_dataset(split_dir(args->data, "train"));
    TrainConfig config = TrainConfig::desk(index.image_size(), index.palette().size());
    if (!args->config.empty()) {
      std::ifstream in(args->config);
      config = TrainConfig::from_json(json::parse(in));
    }
    if (args->steps >= 0) config.max_g_steps = args->steps;
    if (args->batch > 0) config.batch = args->batch;
    if (cmd->count("--seed") > 0) config.seed = args->seed;
    TrainOptions options;
    options.out_dir = args->out;
    if (!args->resume.empty()) options.resume = fs::path(args->resume);
    if (!args->quiet)
      options.on_step = [](const StepRecord& r) { std::cerr << r.to_json().dump() << "\n"; };
    const auto result = train(index, config, options);
    json written = json::array();
    for (const auto& p : result.written) written.push_back(p.string());
    print_json({{"g_steps", result.g_steps},
                {"d_steps", result.d_steps},
                {"diverged", result.diverged},
                {"divergence_report", result.divergence_report},
                {"written", written}});
    if (result.diverged) throw Error(ErrorCode::kDivergence, result.divergence_report);
  });
}

void add_train_evalnets(CLI::App& root) {
  auto* cmd = root.add_subcommand("train-evalnets", "train the feature classifier and the segmenter");
  static std::string data, out;
  static EvalTrainOptions options;
  cmd->add_option("--data", data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  cmd->add_option("--out", out, "output directory")->required();
  cmd->add_option("--steps", options.steps, "optimizer steps per network");
  cmd->add_option("--seed", options.seed, "random seed");
  cmd->callback([] {
    const auto index = load_dataset(split_dir(data, "train"));
    fs::create_directories(out);
    save_checkpoint(train_feature_classifier(index, options), fs::path(out) / "classifier.lcc");
    save_checkpoint(train_segmenter(index, options), fs::path(out) / "segmenter.lcc");
    print_json({{"classifier", (fs::path(out) / "classifier.lcc").string()},
                {"segmenter", (fs::path(out) / "segmenter.lcc").string()}});
  });
}

// ---- composition ---------------------------------------------------------------------

void add_compose(CLI::App& root) {
  auto* cmd = root.add_subcommand("compose", "compose one scene from a layout file");
  static CheckpointArgs ckpts;
  static std::string layout, out, mode = "hard";
  static std::uint64_t seed = 0;
  ckpts.add_to(cmd, false);
  cmd->add_option("--layout", layout, "layout JSON")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", seed, "random seed");
  cmd->add_option("--mode", mode, "hard or raw");
  cmd->add_option("--out", out, "output PNG")->required();
  cmd->callback([] {
    const auto gens = ckpts.load();
    const auto l = load_layout(layout);
    const auto image = compose(gens, l, seed, object_seeds_for(seed, l.size()), parse_compose_mode(mode));
    save_png(image, out);
    print_json({{"out", out}, {"hash", canvas_hash(image)}, {"objects", l.size()}});
  });
}

void add_experiment(CLI::App& root) {
  auto* cmd = root.add_subcommand("experiment", "run a scripted experiment grid");
  static CheckpointArgs ckpts;
  static std::string name, data, out;
  static ExperimentInputs inputs;
  static std::string mode = "hard";
  cmd->add_option("name", name, "affine, occlusion, order, variation, edit, bbox or all")->required();
  ckpts.add_to(cmd);
  cmd->add_option("--data", data, "dataset for layouts and real images")->check(CLI::ExistingDirectory);
  cmd->add_option("--out", out, "output directory")->required();
  cmd->add_option("--seed", inputs.seed, "random seed");
  cmd->add_option("--rows", inputs.rows, "grid rows");
  cmd->add_option("--cols", inputs.cols, "grid columns");
  cmd->add_option("--mode", mode, "hard or raw");
  cmd->callback([] {
    inputs.generators = ckpts.load();
    inputs.mode = parse_compose_mode(mode);
    std::optional<DatasetIndex> index;
    if (!data.empty()) {
      index = load_dataset(split_dir(data, "train"));
      inputs.dataset = &*index;
    }
    std::vector<std::string> names{name};
    if (name == "all") names = experiment_names();
    json report = json::array();
    for (const auto& n : names) {
      if (n == "bbox" && !inputs.generators->has_mask_generator() && name == "all") continue;
      const auto r = run_experiment(n, inputs, out);
      report.push_back({{"name", r.name}, {"hash", r.hash}, {"image", r.image_path.string()}});
    }
    print_json(report);
  });
}

// ---- evaluation ------------------------------------------------------------------------

void add_eval(CLI::App& root) {
  auto* eval = root.add_subcommand("eval", "evaluation metrics");
  eval->require_subcommand(1);

  auto* fid_cmd = eval->add_subcommand("fid", "Frechet distance between two image folders");
  static std::string real, fake, provider = "random-projection", provider_ckpt;
  fid_cmd->add_option("--real", real, "real image directory")->required()->check(CLI::ExistingDirectory);
  fid_cmd->add_option("--fake", fake, "generated image directory")->required()->check(CLI::ExistingDirectory);
  fid_cmd->add_option("--provider", provider, "random-projection or synthetic-classifier");
  fid_cmd->add_option("--provider-ckpt", provider_ckpt, "classifier checkpoint")->check(CLI::ExistingFile);
  fid_cmd->callback([] {
    std::optional<ModelCheckpoint> ckpt;
    if (!provider_ckpt.empty()) ckpt = load_checkpoint(provider_ckpt);
    const auto p = make_feature_provider(provider, ckpt);
    print_json({{"fid", fid(load_image_dir(real), load_image_dir(fake), *p)}, {"provider", p->describe()}});
  });

  auto* iou_cmd = eval->add_subcommand("iou", "mean IoU of a segmenter on composed scenes");
  static CheckpointArgs iou_ckpts;
  static std::string iou_data, split = "train", segmenter_ckpt;
  static int iou_n = 100;
  static std::uint64_t iou_seed = 0;
  iou_ckpts.add_to(iou_cmd, false);
  iou_cmd->add_option("--data", iou_data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  iou_cmd->add_option("--split", split, "train or val")->check(CLI::IsMember({"train", "val"}));
  iou_cmd->add_option("--segmenter-ckpt", segmenter_ckpt, "segmenter checkpoint")->required()->check(CLI::ExistingFile);
  iou_cmd->add_option("--n", iou_n, "scenes to compose");
  iou_cmd->add_option("--seed", iou_seed, "random seed");
  iou_cmd->callback([] {
    const auto index = load_dataset(split_dir(iou_data, split));
    FcnSegmenter seg(load_checkpoint(segmenter_ckpt));
    RandomProjectionFeatures features;
    EvalProtocolInputs in;
    in.generators = iou_ckpts.load();
    in.train = &index;
    in.n_images = iou_n;
    in.seed = iou_seed;
    in.provider = &features;
    in.segmenter = &seg;
    const auto report = eval_protocol(in);
    print_json({{"split", split}, {"iou", report.iou_train.to_json()}, {"segmenter", report.segmenter},
                {"config_hash", report.config_hash}, {"checkpoints", report.checkpoints}});
  });

  auto* report_cmd = eval->add_subcommand("report", "full evaluation report (FID plus train/val IoU)");
  static CheckpointArgs rep_ckpts;
  static std::string rep_data, rep_provider = "synthetic-classifier", rep_provider_ckpt, rep_seg, rep_mode = "hard";
  static int rep_n = 100;
  static std::uint64_t rep_seed = 0;
  rep_ckpts.add_to(report_cmd, false);
  report_cmd->add_option("--data", rep_data, "dataset directory with train/ and val/")->required()->check(CLI::ExistingDirectory);
  report_cmd->add_option("--provider", rep_provider, "feature provider");
  report_cmd->add_option("--provider-ckpt", rep_provider_ckpt, "classifier checkpoint")->check(CLI::ExistingFile);
  report_cmd->add_option("--segmenter-ckpt", rep_seg, "segmenter checkpoint")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--n", rep_n, "scenes to compose");
  report_cmd->add_option("--seed", rep_seed, "random seed");
  report_cmd->add_option("--mode", rep_mode, "hard or raw");
  report_cmd->callback([] {
    const auto train = load_dataset(split_dir(rep_data, "train"));
    std::optional<DatasetIndex> val;
    if (fs::is_directory(fs::path(rep_data) / "val")) val = load_dataset(fs::path(rep_data) / "val");
    std::optional<ModelCheckpoint> ckpt;
    if (!rep_provider_ckpt.empty()) ckpt = load_checkpoint(rep_provider_ckpt);
    const auto provider = make_feature_provider(rep_provider, ckpt);
    FcnSegmenter seg(load_checkpoint(rep_seg));
    EvalProtocolInputs in;
    in.generators = rep_ckpts.load();
    in.train = &train;
    in.val = val ? &*val : nullptr;
    in.n_images = rep_n;
    in.seed = rep_seed;
    in.provider = provider.get();
    in.segmenter = &seg;
    in.hard_mode = parse_compose_mode(rep_mode) == ComposeMode::kHard;
    print_json(eval_protocol(in).to_json());
  });
}

// ---- service -----------------------------------------------------------------------------

CompositionServer* g_server = nullptr;

void add_serve(CLI::App& root) {
  auto* cmd = root.add_subcommand("serve", "run the composition HTTP service");
  static CheckpointArgs ckpts;
  static std::string host = "127.0.0.1", session_dir;
  static int port = 8080;
  static ServiceOptions options;
  ckpts.add_to(cmd);
  cmd->add_option("--host", host, "bind address");
  cmd->add_option("--port", port, "port");
  cmd->add_option("--session-dir", session_dir, "write-through directory for session files");
  cmd->add_option("--timeout", options.timeout_seconds, "per-request timeout in seconds");
  cmd->add_option("--max-body", options.max_body_bytes, "largest accepted request body in bytes");
  cmd->callback([] {
    if (!session_dir.empty()) options.session_dir = fs::path(session_dir);
    CompositionServer server(ckpts.load(), options);
    g_server = &server;
    std::signal(SIGINT, [](int) {
      if (g_server) g_server->stop();
    });
    std::signal(SIGTERM, [](int) {
      if (g_server) g_server->stop();
    });
    std::cerr << "listening on " << host << ":" << port << " (" << server.store().ids().size()
              << " sessions restored)\n";
    const bool ok = server.listen(host, port);
    g_server = nullptr;
    if (!ok) throw Error(ErrorCode::kIo, "cannot listen on " + host + ":" + std::to_string(port));
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"layercomp: layered scene composition"};
  app.require_subcommand(1);
  add_synth(app);
  add_ingest(app);
  add_train(app, "train-bg", "train the background model", &train_bg);
  add_train(app, "train-fg", "train the foreground model", &train_fg);
  add_train(app, "train-maskgen", "train the box-to-mask model", &train_mask_gen);
  add_train_evalnets(app);
  add_compose(app);
  add_experiment(app);
  add_eval(app);
  add_serve(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kInvalidInput || e.code() == ErrorCode::kConfig ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
