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
#include <barrier>
#include <filesystem>
#include <thread>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "layercomp/image_io.hpp"
#include "layercomp/rle.hpp"
#include "layercomp/service.hpp"

// Last: resolv.h defines macros that clash with Eigen parameter names.
#include <httplib.h>

namespace layercomp {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class ServiceTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { gens_ = testing::random_generators(testing::tiny_config(), 5); }
  static void TearDownTestSuite() { gens_.reset(); }

  void SetUp() override { start({}); }

  void start(ServiceOptions options) {
    client_.reset();
    server_ = std::make_unique<CompositionServer>(gens_, std::move(options));
    port_ = server_->start("127.0.0.1", 0);
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }

  static json body(const httplib::Result& r) { return json::parse(r->body); }

  std::string create(std::uint64_t seed = 7) {
    auto r = client_->Post("/sessions", json{{"width", 32}, {"height", 32}, {"mode", "hard"},
                                             {"background", {{"kind", "generate"}, {"seed", seed}}}}.dump(),
                           "application/json");
    EXPECT_EQ(r->status, 201);
    return body(r).at("session_id");
  }

  static std::string square_rle(int r0, int c0, int size) {
    OccupancyMap m(32, 32);
    for (int r = r0; r < r0 + size; ++r)
      for (int c = c0; c < c0 + size; ++c) m.set(r, c);
    return rle_encode(m);
  }

  httplib::Result add(const std::string& id, const std::string& rle, int cls, std::uint64_t seed) {
    return client_->Post("/sessions/" + id + "/objects",
                         json{{"class_id", cls}, {"mask_rle", rle}, {"seed", seed}}.dump(), "application/json");
  }

  Canvas canvas(const std::string& id, int step = -1) {
    auto r = client_->Get("/sessions/" + id + "/canvas" + (step >= 0 ? "?step=" + std::to_string(step) : ""));
    EXPECT_EQ(r->status, 200);
    return decode_image(std::vector<std::uint8_t>(r->body.begin(), r->body.end()));
  }

  static std::shared_ptr<GeneratorSet> gens_;
  std::unique_ptr<CompositionServer> server_;
  std::unique_ptr<httplib::Client> client_;
  int port_ = 0;
};

std::shared_ptr<GeneratorSet> ServiceTest::gens_;

TEST_F(ServiceTest, SameSeedSessionsAreIdentical) {
  const auto a = create(7), b = create(7);
  EXPECT_NE(a, b);
  EXPECT_EQ(client_->Get("/sessions/" + a + "/canvas")->body, client_->Get("/sessions/" + b + "/canvas")->body);
}

TEST_F(ServiceTest, InvalidCreateBodies) {
  const json good = {{"width", 32}, {"height", 32}, {"mode", "hard"}, {"background", {{"kind", "generate"}}}};
  for (const char* key : {"mode", "width", "background"}) {
    auto doc = good;
    doc.erase(key);
    EXPECT_EQ(client_->Post("/sessions", doc.dump(), "application/json")->status, 400) << key;
  }
  auto wrong = good;
  wrong["width"] = 64;
  EXPECT_EQ(client_->Post("/sessions", wrong.dump(), "application/json")->status, 400);
  wrong = good;
  wrong["background"] = {{"kind", "upload"}, {"image", "not base64!"}};
  EXPECT_EQ(client_->Post("/sessions", wrong.dump(), "application/json")->status, 400);
  EXPECT_EQ(client_->Post("/sessions", "{not json", "application/json")->status, 400);
}

TEST_F(ServiceTest, OversizedUploadIs413) {
  ServiceOptions small;
  small.max_body_bytes = 1024;
  start(small);
  std::string big(4096, 'A');
  const json doc = {{"width", 32}, {"height", 32}, {"mode", "hard"}, {"background", {{"kind", "upload"}, {"image", big}}}};
  EXPECT_EQ(client_->Post("/sessions", doc.dump(), "application/json")->status, 413);
}

TEST_F(ServiceTest, UploadRoundTrip) {
  Canvas img(32, 32, 3);
  Rng rng(3);
  for (auto& v : img.data()) v = from_byte(static_cast<std::uint8_t>(rng.below(256)));
  const auto png = encode_png(img);
  auto r = client_->Post("/sessions",
                         json{{"width", 32}, {"height", 32}, {"mode", "hard"},
                              {"background", {{"kind", "upload"}, {"image", base64_encode(png)}}}}.dump(),
                         "application/json");
  ASSERT_EQ(r->status, 201);
  const std::string id = body(r).at("session_id");
  EXPECT_EQ(client_->Get("/sessions/" + id + "/canvas?step=0")->body, std::string(png.begin(), png.end()));
}

TEST_F(ServiceTest, AddObjectMatchesLibrary) {
  const auto id = create(7);
  auto r = add(id, square_rle(4, 4, 10), 1, 21);
  ASSERT_EQ(r->status, 201);
  const auto reply = body(r);
  EXPECT_EQ(reply.at("object_id"), 0);
  EXPECT_EQ(reply.at("canvas_version"), 1);
  EXPECT_EQ(reply.at("mask_rle"), square_rle(4, 4, 10));

  CompositionSession direct(gens_, BackgroundSource::generate(7), ComposeMode::kHard);
  direct.add_object(InstanceMask(rle_decode(square_rle(4, 4, 10), 32, 32), 1, 3), 21);
  EXPECT_EQ(canvas(id), decode_image(encode_png(direct.current())));
}

TEST_F(ServiceTest, ObjectErrors) {
  const auto id = create();
  EXPECT_EQ(add("nope", square_rle(1, 1, 3), 0, 1)->status, 404);
  EXPECT_EQ(add(id, rle_encode(OccupancyMap(32, 32)), 0, 1)->status, 422);
  EXPECT_EQ(add(id, square_rle(1, 1, 3), 9, 1)->status, 400);
  EXPECT_EQ(client_->Post("/sessions/" + id + "/objects", json{{"class_id", 0}}.dump(), "application/json")->status,
            400);
  EXPECT_EQ(client_->Post("/sessions/" + id + "/objects/3/resample", json{{"seed", 1}}.dump(), "application/json")
                ->status,
            404);
  EXPECT_EQ(body(client_->Get("/sessions/" + id)).at("canvas_version"), 0);
}

TEST_F(ServiceTest, BoxPathReturnsGeneratedMask) {
  const auto id = create();
  auto r = client_->Post("/sessions/" + id + "/objects",
                         json{{"class_id", 2},
                              {"bbox", {{"row_min", 4}, {"row_max", 20}, {"col_min", 6}, {"col_max", 18}}},
                              {"seed", 5}}.dump(),
                         "application/json");
  ASSERT_EQ(r->status, 201);
  const auto mask = rle_decode(body(r).at("mask_rle"), 32, 32);
  EXPECT_TRUE(mask.any());
  for (int row = 0; row < 32; ++row)
    for (int c = 0; c < 32; ++c)
      if (mask.at(row, c)) EXPECT_TRUE(row >= 4 && row <= 20 && c >= 6 && c <= 18);
}

TEST_F(ServiceTest, MutationsBumpVersionAndReplay) {
  const auto id = create();
  ASSERT_EQ(add(id, square_rle(2, 2, 8), 0, 1)->status, 201);
  ASSERT_EQ(add(id, square_rle(12, 10, 9), 2, 2)->status, 201);
  const auto before = canvas(id);

  auto r = client_->Put("/sessions/" + id + "/order", json{{"ids", {0, 1}}}.dump(), "application/json");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(body(r).at("canvas_version"), 3);
  EXPECT_EQ(canvas(id), before);

  EXPECT_EQ(client_->Put("/sessions/" + id + "/order", json{{"ids", {0, 0}}}.dump(), "application/json")->status,
            409);
  EXPECT_EQ(client_->Put("/sessions/" + id + "/order", json{{"ids", {1}}}.dump(), "application/json")->status, 409);

  r = client_->Post("/sessions/" + id + "/objects/0/transform", json{{"dx", 3}, {"dy", 2}}.dump(), "application/json");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(body(r).at("canvas_version"), 4);
  r = client_->Post("/sessions/" + id + "/objects/0/transform", json{{"dx", -3}, {"dy", -2}}.dump(),
                    "application/json");
  EXPECT_EQ(body(r).at("mask_rle"), square_rle(2, 2, 8));
  EXPECT_EQ(canvas(id), before);
  EXPECT_EQ(client_->Post("/sessions/" + id + "/objects/0/transform", json{{"dx", 500}}.dump(), "application/json")
                ->status,
            422);

  r = client_->Post("/sessions/" + id + "/objects/1/resample", json{{"seed", 99}}.dump(), "application/json");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(body(r).at("canvas_version"), 6);

  const auto state = body(client_->Get("/sessions/" + id));
  EXPECT_EQ(state.at("canvas_version"), 6);
  EXPECT_EQ(state.at("n_steps"), 2);
  const auto replayed = CompositionSession::from_json(state, gens_);
  EXPECT_EQ(decode_image(encode_png(replayed.current())), canvas(id));
  EXPECT_EQ(canvas(id, 0), canvas(id, 0));
  EXPECT_EQ(client_->Get("/sessions/" + id + "/canvas?step=3")->status, 404);
  EXPECT_EQ(client_->Get("/sessions/" + id + "/canvas?step=x")->status, 400);
}

TEST_F(ServiceTest, StepZeroIsBackground) {
  const auto id = create(9);
  ASSERT_EQ(add(id, square_rle(2, 2, 8), 0, 1)->status, 201);
  CompositionSession direct(gens_, BackgroundSource::generate(9), ComposeMode::kHard);
  EXPECT_EQ(canvas(id, 0), decode_image(encode_png(direct.canvas(0))));
}

TEST_F(ServiceTest, DeleteRemovesSession) {
  const auto id = create();
  EXPECT_EQ(client_->Delete("/sessions/" + id)->status, 200);
  EXPECT_EQ(client_->Get("/sessions/" + id)->status, 404);
  EXPECT_EQ(client_->Delete("/sessions/" + id)->status, 404);
}

TEST_F(ServiceTest, ConcurrentAddsSerialize) {
  const auto id = create();
  const std::vector<std::string> masks{square_rle(1, 1, 6), square_rle(20, 20, 7), square_rle(10, 2, 5),
                                       square_rle(2, 18, 8)};
  std::barrier sync(static_cast<std::ptrdiff_t>(masks.size()));
  std::vector<int> versions(masks.size());
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    threads.emplace_back([&, i] {
      httplib::Client c("127.0.0.1", port_);
      sync.arrive_and_wait();
      auto r = c.Post("/sessions/" + id + "/objects",
                      json{{"class_id", static_cast<int>(i % 3)}, {"mask_rle", masks[i]}, {"seed", i}}.dump(),
                      "application/json");
      versions[i] = r && r->status == 201 ? json::parse(r->body).at("canvas_version").get<int>() : -1;
    });
  }
  for (auto& t : threads) t.join();
  std::sort(versions.begin(), versions.end());
  EXPECT_EQ(versions, (std::vector<int>{1, 2, 3, 4}));
  const auto state = body(client_->Get("/sessions/" + id));
  ASSERT_EQ(state.at("steps").size(), masks.size());
  // Arrival order is the version order; replay in that order reproduces the canvas.
  const auto replayed = CompositionSession::from_json(state, gens_);
  EXPECT_EQ(decode_image(encode_png(replayed.current())), canvas(id));
}

TEST_F(ServiceTest, RestartReplaysSessionFiles) {
  const auto dir = fs::temp_directory_path() / "layercomp_service_sessions";
  fs::remove_all(dir);
  ServiceOptions persisted;
  persisted.session_dir = dir;
  start(persisted);
  const auto id = create(11);
  ASSERT_EQ(add(id, square_rle(3, 3, 9), 1, 4)->status, 201);
  ASSERT_EQ(add(id, square_rle(15, 12, 10), 0, 5)->status, 201);
  const auto before = client_->Get("/sessions/" + id + "/canvas")->body;
  const auto version = body(client_->Get("/sessions/" + id)).at("canvas_version");
  server_->stop();
  start(persisted);
  EXPECT_EQ(client_->Get("/sessions/" + id + "/canvas")->body, before);
  EXPECT_EQ(body(client_->Get("/sessions/" + id)).at("canvas_version"), version);
  ASSERT_EQ(client_->Delete("/sessions/" + id)->status, 200);
  EXPECT_FALSE(fs::exists(dir / (id + ".json")));
  fs::remove_all(dir);
}

}  // namespace
}  // namespace layercomp
