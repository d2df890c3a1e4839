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

#include "layercomp/error.hpp"
#include "layercomp/image_io.hpp"
#include "layercomp/rng.hpp"

namespace layercomp {
namespace {

Canvas quantized_canvas(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  Canvas c(h, w, 3);
  for (auto& v : c.data()) v = from_byte(static_cast<std::uint8_t>(rng.below(256)));
  return c;
}

TEST(ImageIo, ByteMappingRoundTrips) {
  for (int b = 0; b < 256; ++b) EXPECT_EQ(to_byte(from_byte(static_cast<std::uint8_t>(b))), b);
  EXPECT_EQ(to_byte(-1.0f), 0);
  EXPECT_EQ(to_byte(1.0f), 255);
  EXPECT_EQ(to_byte(5.0f), 255);
}

TEST(ImageIo, PngRoundTripIsExactOnQuantizedPixels) {
  const auto c = quantized_canvas(13, 9, 3);
  EXPECT_EQ(decode_image(encode_png(c)), c);
}

TEST(ImageIo, FileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "layercomp_image_io";
  std::filesystem::create_directories(dir);
  const auto c = quantized_canvas(8, 8, 9);
  save_png(c, dir / "a.png");
  EXPECT_EQ(load_image(dir / "a.png"), c);
  std::filesystem::remove_all(dir);
}

TEST(ImageIo, GarbageIsRejected) {
  EXPECT_THROW(decode_image({1, 2, 3, 4}), Error);
}

TEST(ImageIo, Base64KnownVectors) {
  EXPECT_EQ(base64_encode({'M', 'a', 'n'}), "TWFu");
  EXPECT_EQ(base64_encode({'M', 'a'}), "TWE=");
  EXPECT_EQ(base64_encode({'M'}), "TQ==");
  EXPECT_EQ(base64_decode("TWE="), (std::vector<std::uint8_t>{'M', 'a'}));
  EXPECT_THROW(base64_decode("T*=="), Error);
}

TEST(ImageIo, ResizeKeepsConstantImages) {
  Canvas c(10, 6, 3, 0.3f);
  const auto r = resize_bilinear(c, 4, 7);
  EXPECT_EQ(r.height(), 4);
  EXPECT_EQ(r.width(), 7);
  for (float v : r.data()) EXPECT_NEAR(v, 0.3f, 1e-6);
}

TEST(ImageIo, GridHasGaps) {
  Canvas a(4, 4, 3, 1.0f);
  const auto g = make_grid({{a, a}, {a, a}}, 2);
  EXPECT_EQ(g.height(), 10);
  EXPECT_EQ(g.width(), 10);
}

}  // namespace
}  // namespace layercomp
