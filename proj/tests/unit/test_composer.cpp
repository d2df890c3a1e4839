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
#include <filesystem>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "layercomp/composer.hpp"
#include "layercomp/error.hpp"
#include "oracles.hpp"

namespace layercomp {
namespace {

class ComposerTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { gens_ = testing::random_generators(testing::tiny_config(), 3); }
  static void TearDownTestSuite() { gens_.reset(); }

  static InstanceMask blob(int r0, int c0, int size, int cls) {
    OccupancyMap plane(32, 32);
    for (int r = r0; r < r0 + size; ++r)
      for (int c = c0; c < c0 + size; ++c) plane.set(r, c);
    return InstanceMask(plane, cls, 3);
  }

  CompositionSession three_objects(ComposeMode mode = ComposeMode::kHard) {
    CompositionSession s(gens_, BackgroundSource::generate(7), mode);
    s.add_object(blob(2, 2, 10, 0), 11);
    s.add_object(blob(8, 12, 12, 1), 12);
    s.add_object(blob(18, 4, 9, 2), 13);
    return s;
  }

  static std::shared_ptr<GeneratorSet> gens_;
};

std::shared_ptr<GeneratorSet> ComposerTest::gens_;

TEST_F(ComposerTest, BackgroundPreservedOutsideEachBox) {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    CompositionSession s(gens_, BackgroundSource::generate(trial), ComposeMode::kHard);
    auto layout = oracle::random_layout(rng, 32, 32, 3, 4);
    for (const auto& m : layout.instances()) s.add_object(m, rng.next_u64());
    for (int t = 1; t <= static_cast<int>(s.steps().size()); ++t) {
      const auto& box = s.steps()[t - 1].bbox;
      const auto &before = s.canvas(t - 1), &after = s.canvas(t);
      for (int r = 0; r < 32; ++r)
        for (int c = 0; c < 32; ++c)
          if (!box.contains(r, c))
            for (int ch = 0; ch < 3; ++ch) ASSERT_EQ(before.at(r, c, ch), after.at(r, c, ch));
    }
  }
}

TEST_F(ComposerTest, ObjectsChangeTheirBox) {
  const auto s = three_objects();
  EXPECT_NE(s.canvas(0), s.canvas(1));
  EXPECT_TRUE(s.current().in_range());
}

TEST_F(ComposerTest, EmptyLayoutIsTheBackground) {
  SemanticLayout empty(32, 32, 3);
  CompositionSession s(gens_, BackgroundSource::generate(5), ComposeMode::kHard);
  EXPECT_EQ(compose(gens_, empty, 5, {}), s.canvas(0));
  EXPECT_EQ(compose(gens_, empty, 5, {}), bg_inference(gens_->background, noise_from_seed(5, gens_->config.z_dim)));
}

TEST_F(ComposerTest, OneShotEqualsStepwise) {
  SemanticLayout layout(32, 32, 3);
  layout.add(blob(2, 2, 10, 0));
  layout.add(blob(8, 12, 12, 1));
  layout.add(blob(18, 4, 9, 2));
  EXPECT_EQ(compose(gens_, layout, 7, {11, 12, 13}), three_objects().current());
  EXPECT_THROW(compose(gens_, layout, 7, {11}), Error);
}

TEST_F(ComposerTest, ReplayIsBitExact) {
  auto s = three_objects();
  s.transform_object(1, AffineTransform{2.0, 1.0, 0.0, 1.0});
  s.resample_object(0, 99);
  const auto doc = s.to_json();
  const auto back = CompositionSession::from_json(nlohmann::json::parse(doc.dump()), gens_);
  EXPECT_EQ(back.canvases(), s.canvases());
  EXPECT_EQ(back.to_json(), doc);
}

TEST_F(ComposerTest, ReplayDetectsOtherCheckpoints) {
  const auto doc = three_objects().to_json();
  const auto other = testing::random_generators(testing::tiny_config(), 4);
  try {
    CompositionSession::from_json(doc, other);
    FAIL() << "expected a version error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kVersion);
  }
  auto tampered = doc;
  tampered["steps"][0]["seed"] = 12345;
  EXPECT_THROW(CompositionSession::from_json(tampered, gens_), Error);
}

TEST_F(ComposerTest, IdentityReorderKeepsPixels) {
  auto s = three_objects();
  const auto before = s.canvases();
  s.reorder({0, 1, 2});
  EXPECT_EQ(s.canvases(), before);
}

TEST_F(ComposerTest, ReorderMatchesFreshComposition) {
  auto s = three_objects();
  s.reorder({2, 0, 1});
  CompositionSession fresh(gens_, BackgroundSource::generate(7), ComposeMode::kHard);
  fresh.add_object(blob(18, 4, 9, 2), 13);
  fresh.add_object(blob(2, 2, 10, 0), 11);
  fresh.add_object(blob(8, 12, 12, 1), 12);
  EXPECT_EQ(s.current(), fresh.current());
  EXPECT_EQ(s.index_of(2), 0);
}

TEST_F(ComposerTest, BadPermutationIsAConflict) {
  auto s = three_objects();
  const auto before = s.canvases();
  for (const auto& order : std::vector<std::vector<int>>{{0, 1}, {0, 1, 1}, {0, 1, 5}}) {
    try {
      s.reorder(order);
      FAIL() << "expected a conflict";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kConflict);
    }
  }
  EXPECT_EQ(s.canvases(), before);
}

TEST_F(ComposerTest, ResampleIsSeedDeterministic) {
  auto a = three_objects(), b = three_objects();
  a.resample_object(1, 500);
  b.resample_object(1, 500);
  EXPECT_EQ(a.canvases(), b.canvases());
  EXPECT_EQ(a.canvas(1), three_objects().canvas(1));
  a.resample_object(1, 12);
  EXPECT_EQ(a.canvases(), three_objects().canvases());
}

TEST_F(ComposerTest, TransformThenInverseRestores) {
  auto s = three_objects();
  const auto before = s.canvases();
  const auto mask = s.steps()[0].mask;
  s.transform_object(0, AffineTransform{3.0, 4.0, 0.0, 1.0});
  EXPECT_NE(s.steps()[0].mask, mask);
  s.transform_object(0, AffineTransform{-3.0, -4.0, 0.0, 1.0});
  EXPECT_EQ(s.steps()[0].mask, mask);
  EXPECT_EQ(s.canvases(), before);
}

TEST_F(ComposerTest, InvalidMasksAreRejected) {
  CompositionSession s(gens_, BackgroundSource::generate(1), ComposeMode::kHard);
  try {
    s.add_object(InstanceMask(OccupancyMap(32, 32), 0, 3), 1);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyMask);
  }
  EXPECT_THROW(s.add_object(InstanceMask(OccupancyMap(16, 16, 1), 0, 3), 1), Error);
  EXPECT_THROW(s.resample_object(42, 1), Error);
  EXPECT_THROW(s.canvas(1), Error);
  EXPECT_TRUE(s.steps().empty());
}

TEST_F(ComposerTest, BoxPathUsesMaskGenerator) {
  CompositionSession s(gens_, BackgroundSource::generate(2), ComposeMode::kHard);
  const BBox box{5, 20, 6, 25};
  s.add_object_from_bbox(box, 1, 77);
  ASSERT_EQ(s.steps().size(), 1u);
  const auto& step = s.steps()[0];
  ASSERT_TRUE(step.source_box.has_value());
  EXPECT_EQ(*step.source_box, box);
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 32; ++c)
      if (step.mask.plane().at(r, c)) EXPECT_TRUE(box.contains(r, c));
  const auto no_mask = testing::random_generators(testing::tiny_config(), 3, false);
  CompositionSession t(no_mask, BackgroundSource::generate(2), ComposeMode::kHard);
  try {
    t.add_object_from_bbox(box, 1, 77);
    FAIL() << "expected a config error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
}

TEST_F(ComposerTest, UploadedBackgroundIsKept) {
  Canvas img(32, 32, 3);
  Rng rng(1);
  for (auto& v : img.data()) v = static_cast<float>(rng.uniform(-1, 1));
  CompositionSession s(gens_, BackgroundSource::upload(img), ComposeMode::kHard);
  EXPECT_EQ(s.canvas(0), img);
  s.add_object(blob(3, 3, 5, 0), 1);
  const auto back = CompositionSession::from_json(s.to_json(), gens_);
  EXPECT_EQ(back.canvases(), s.canvases());
  EXPECT_THROW(CompositionSession(gens_, BackgroundSource::upload(Canvas(8, 8, 3)), ComposeMode::kHard), Error);
}

TEST_F(ComposerTest, RawModeEmitsWholeFrame) {
  const auto hard = three_objects(ComposeMode::kHard), raw = three_objects(ComposeMode::kRaw);
  EXPECT_EQ(hard.canvas(0), raw.canvas(0));
  EXPECT_EQ(parse_compose_mode("raw"), ComposeMode::kRaw);
  EXPECT_EQ(to_string(ComposeMode::kHard), "hard");
  EXPECT_THROW(parse_compose_mode("soft"), Error);
}

TEST_F(ComposerTest, ExperimentsAreHashStable) {
  const auto data = synth_dataset(10, 32, 3, 2);
  ExperimentInputs in;
  in.generators = gens_;
  in.dataset = &data;
  in.seed = 3;
  in.rows = 2;
  in.cols = 3;
  const auto dir = std::filesystem::temp_directory_path() / "layercomp_experiments";
  std::filesystem::remove_all(dir);
  for (const auto& name : experiment_names()) {
    const auto a = run_experiment(name, in, dir);
    const auto b = run_experiment(name, in, {});
    EXPECT_EQ(a.hash, b.hash) << name;
    EXPECT_EQ(a.hash, canvas_hash(a.grid)) << name;
    EXPECT_TRUE(std::filesystem::exists(a.image_path)) << name;
    EXPECT_TRUE(std::filesystem::exists(a.manifest_path)) << name;
  }
  EXPECT_THROW(run_experiment("nonsense", in, {}), Error);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace layercomp
