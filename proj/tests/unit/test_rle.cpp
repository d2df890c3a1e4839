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
#include <gtest/gtest.h>

#include "layercomp/error.hpp"
#include "layercomp/rle.hpp"
#include "oracles.hpp"

namespace layercomp {
namespace {

OccupancyMap column(const std::vector<int>& bits) {
  OccupancyMap m(static_cast<int>(bits.size()), 1);
  for (std::size_t i = 0; i < bits.size(); ++i) m.set(static_cast<int>(i), 0, static_cast<std::uint8_t>(bits[i]));
  return m;
}

TEST(Rle, CountsAreColumnMajorStartingWithZeros) {
  OccupancyMap m(2, 2);
  m.set(1, 0);
  m.set(0, 1);
  m.set(1, 1);
  EXPECT_EQ(rle_counts(m), (std::vector<std::uint32_t>{1, 3}));
  OccupancyMap full(2, 2, 1);
  EXPECT_EQ(rle_counts(full), (std::vector<std::uint32_t>{0, 4}));
}

TEST(Rle, StringFormMatchesHandEncoding) {
  EXPECT_EQ(rle_encode(column({0, 1, 1, 1})), "13");
  // counts 1,3,2,5: the fourth count is delta coded against the second.
  EXPECT_EQ(rle_encode(column({0, 1, 1, 1, 0, 0, 1, 1, 1, 1, 1})), "1322");
}

TEST(Rle, RoundTripRandomMaps) {
  Rng rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const int h = 1 + static_cast<int>(rng.below(40)), w = 1 + static_cast<int>(rng.below(40));
    OccupancyMap m(h, w);
    const double p = rng.uniform();
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c)
        if (rng.uniform() < p) m.set(r, c);
    EXPECT_EQ(rle_decode(rle_encode(m), h, w), m);
    EXPECT_EQ(rle_from_counts(rle_counts(m), h, w), m);
  }
}

TEST(Rle, WrongTotalIsRejected) {
  EXPECT_THROW(rle_from_counts({1, 2}, 2, 2), Error);
  EXPECT_THROW(rle_decode("13", 3, 3), Error);
}

}  // namespace
}  // namespace layercomp
