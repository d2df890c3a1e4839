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
#include "layercomp/layout.hpp"
#include "oracles.hpp"

namespace layercomp {
namespace {

TEST(Layout, AggregateMatchesLoopOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int h = 1 + static_cast<int>(rng.below(9)), w = 1 + static_cast<int>(rng.below(9));
    const int n = 1 + static_cast<int>(rng.below(4));
    auto layout = oracle::random_layout(rng, h, w, n, 5);
    if (layout.empty()) continue;
    const auto agg = aggregate(layout);
    EXPECT_EQ(agg.data(), oracle::aggregate(layout));
    EXPECT_EQ(aggregate_occupancy(agg).data(), oracle::occupancy(agg.data(), h, w, n));
  }
}

TEST(Layout, EmptyLayoutHasNoAggregate) {
  SemanticLayout layout(4, 4, 2);
  try {
    aggregate(layout);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyLayout);
  }
}

TEST(Layout, OccupancyOfSingleInstanceIsItsPlane) {
  OccupancyMap plane(3, 4);
  plane.set(0, 1);
  plane.set(2, 3);
  InstanceMask m(plane, 1, 3);
  EXPECT_EQ(occupancy_of(m), plane);
  EXPECT_EQ(m.at(0, 1, 1), 1);
  EXPECT_EQ(m.at(0, 1, 0), 0);
}

TEST(Layout, DenseRoundTrip) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto layout = oracle::random_layout(rng, 6, 5, 3, 1);
    if (layout.empty()) continue;
    const auto& m = layout[0];
    EXPECT_EQ(InstanceMask::from_dense(m.to_dense(), m.class_id()), m);
  }
}

TEST(Layout, BBoxMatchesOracleWithPadding) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int h = 1 + static_cast<int>(rng.below(10)), w = 1 + static_cast<int>(rng.below(10));
    auto layout = oracle::random_layout(rng, h, w, 2, 1);
    if (layout.empty()) continue;
    const auto occ = occupancy_of(layout[0]);
    const int pad = static_cast<int>(rng.below(3));
    const auto box = bbox_of(occ, pad);
    EXPECT_EQ((std::vector<int>{box.row_min, box.row_max, box.col_min, box.col_max}),
              oracle::bbox(occ.data(), h, w, pad));
    const auto boxed = bbox_mask(box, h, w);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) EXPECT_EQ(boxed.at(r, c), box.contains(r, c) ? 1 : 0);
  }
}

TEST(Layout, BBoxOfEmptyMapIsAnError) {
  try {
    bbox_of(OccupancyMap(3, 3));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyMask);
  }
}

TEST(Layout, LabelMapLaterInstancesWin) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    auto layout = oracle::random_layout(rng, 7, 7, 3, 4);
    EXPECT_EQ(label_map(layout), oracle::label_map(layout));
  }
}

TEST(Layout, MaskOutZeroesOnlyOccupiedPixels) {
  Canvas img(3, 3, 3, 0.25f);
  OccupancyMap occ(3, 3);
  occ.set(1, 1);
  const auto out = mask_out(img, occ);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      for (int ch = 0; ch < 3; ++ch) EXPECT_EQ(out.at(r, c, ch), (r == 1 && c == 1) ? 0.0f : 0.25f);
}

TEST(Layout, IdentityTransformKeepsMask) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto layout = oracle::random_layout(rng, 12, 12, 2, 3);
    for (const auto& m : layout.instances()) EXPECT_EQ(apply_affine(m, AffineTransform{}), m);
  }
}

TEST(Layout, IntegerTranslationRoundTrip) {
  OccupancyMap plane(16, 16);
  for (int r = 5; r < 9; ++r)
    for (int c = 4; c < 10; ++c) plane.set(r, c);
  InstanceMask m(plane, 0, 2);
  const auto moved = apply_affine(m, AffineTransform{3.0, -2.0, 0.0, 1.0});
  EXPECT_EQ(moved.plane().at(3, 7), 1);
  EXPECT_EQ(moved.plane().at(3, 6), 0);
  EXPECT_EQ(moved.plane().count(), plane.count());
  EXPECT_EQ(apply_affine(moved, AffineTransform{-3.0, 2.0, 0.0, 1.0}), m);
}

TEST(Layout, TransformOutOfFrameIsAnError) {
  OccupancyMap plane(8, 8);
  plane.set(2, 2);
  try {
    apply_affine(InstanceMask(plane, 0, 1), AffineTransform{100.0, 0.0, 0.0, 1.0});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfFrame);
  }
}

TEST(Layout, ClassIdOutOfRangeRejected) {
  OccupancyMap plane(2, 2, 1);
  EXPECT_THROW(InstanceMask(plane, 3, 3), Error);
  EXPECT_THROW(InstanceMask(plane, -1, 3), Error);
}

}  // namespace
}  // namespace layercomp
