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
#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include "layercomp/error.hpp"
#include "layercomp/eval.hpp"
#include "oracles.hpp"

namespace layercomp {
namespace {

GaussianStats stats(Eigen::VectorXd mu, Eigen::MatrixXd cov) { return {std::move(mu), std::move(cov)}; }

TEST(FitGaussian, HandComputedMoments) {
  Eigen::MatrixXd x(2, 2);
  x << 0, 0, 2, 0;
  const auto g = fit_gaussian(x);
  EXPECT_DOUBLE_EQ(g.mean(0), 1.0);
  EXPECT_DOUBLE_EQ(g.mean(1), 0.0);
  EXPECT_DOUBLE_EQ(g.cov(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(g.cov(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(g.cov(1, 1), 0.0);
}

TEST(FitGaussian, IdenticalRowsHaveZeroCovariance) {
  Eigen::MatrixXd x(3, 4);
  x.rowwise() = Eigen::RowVector4d(1, 2, 3, 4);
  EXPECT_EQ(fit_gaussian(x).cov.norm(), 0.0);
}

TEST(FitGaussian, NeedsTwoRows) {
  try {
    fit_gaussian(Eigen::MatrixXd::Ones(1, 3));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidInput);
  }
}

TEST(FitGaussian, RowOrderDoesNotMatter) {
  Rng rng(2);
  Eigen::MatrixXd x(20, 5);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 5; ++j) x(i, j) = rng.normal();
  std::vector<int> perm(20);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[3], perm[11]);
  Eigen::MatrixXd y(20, 5);
  for (int i = 0; i < 20; ++i) y.row(i) = x.row(perm[i]);
  const auto a = fit_gaussian(x), b = fit_gaussian(y);
  EXPECT_LT((a.mean - b.mean).norm(), 1e-12);
  EXPECT_LT((a.cov - b.cov).norm(), 1e-12);
}

TEST(Frechet, GoldenValues) {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_NEAR(frechet_distance(stats(Eigen::Vector2d(0, 0), id), stats(Eigen::Vector2d(3, 4), id)), 25.0, 1e-6);
  EXPECT_NEAR(frechet_distance(stats(Eigen::Vector2d(1, 1), id), stats(Eigen::Vector2d(1, 1), 4 * id)), 2.0, 1e-6);
  const auto a = stats(Eigen::Vector2d(0.3, -2), Eigen::Matrix2d{{2, 0.5}, {0.5, 1}});
  EXPECT_LE(std::abs(frechet_distance(a, a)), 1e-9);
}

TEST(Frechet, SymmetricAndMatchesEigenvalueOracle) {
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 2 + trial % 6;
    Eigen::VectorXd ma(d), mb(d);
    for (int i = 0; i < d; ++i) {
      ma(i) = rng.normal();
      mb(i) = rng.normal();
    }
    const auto ca = oracle::random_psd(rng, d, 1 + trial % d), cb = oracle::random_psd(rng, d, d + 2);
    const double ab = frechet_distance(stats(ma, ca), stats(mb, cb));
    const double ba = frechet_distance(stats(mb, cb), stats(ma, ca));
    EXPECT_NEAR(ab, ba, 1e-6);
    EXPECT_NEAR(ab, oracle::frechet(ma, ca, mb, cb), 1e-6 * std::max(1.0, ab));
    EXPECT_GE(ab, 0.0);
  }
}

TEST(Frechet, TranslatingBothMeansChangesNothing) {
  Rng rng(1);
  const auto ca = oracle::random_psd(rng, 4, 4), cb = oracle::random_psd(rng, 4, 2);
  Eigen::Vector4d ma(1, 2, 3, 4), mb(0, -1, 2, 0.5), shift(10, -7, 3, 100);
  EXPECT_NEAR(frechet_distance(stats(ma, ca), stats(mb, cb)),
              frechet_distance(stats(ma + shift, ca), stats(mb + shift, cb)), 1e-8);
}

TEST(Frechet, ProductRootResidual) {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 3 + trial % 8;
    const auto a = oracle::random_psd(rng, d, d + 1), b = oracle::random_psd(rng, d, 1 + trial % d);
    const Eigen::MatrixXd prod = a * b;
    const auto r = product_sqrt(a, b);
    EXPECT_LE((r * r - prod).norm() / prod.norm(), 1e-5);
  }
}

TEST(Frechet, NonPsdInputIsANumericalError) {
  Eigen::Matrix2d bad{{1, 0}, {0, -1}};
  try {
    product_sqrt(bad, Eigen::Matrix2d::Identity());
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumerical);
  }
  EXPECT_THROW(frechet_distance(stats(Eigen::Vector2d(0, 0), Eigen::Matrix2d::Identity()),
                                stats(Eigen::Vector3d(0, 0, 0), Eigen::Matrix3d::Identity())),
               Error);
}

SemanticLayout single(const OccupancyMap& plane, int cls, int n = 2) {
  SemanticLayout l(plane.height(), plane.width(), n);
  l.add(InstanceMask(plane, cls, n));
  return l;
}

TEST(MeanIou, GoldenCases) {
  OccupancyMap gt(4, 4);
  for (int c = 0; c < 4; ++c) {
    gt.set(0, c);
    gt.set(1, c);
  }
  const auto layout = single(gt, 0);
  const auto labels = label_map(layout);
  EXPECT_EQ(mean_iou({labels}, {layout}).mean, 1.0);

  std::vector<std::int32_t> disjoint(16, 0);
  for (int i = 8; i < 16; ++i) disjoint[i] = 1;
  EXPECT_EQ(mean_iou({disjoint}, {layout}).mean, 0.0);

  std::vector<std::int32_t> half(16, 0);
  for (int c = 0; c < 4; ++c) half[c] = 1;
  const auto r = mean_iou({half}, {layout});
  EXPECT_EQ(r.mean, 0.5);
  ASSERT_EQ(r.per_class.size(), 2u);
  EXPECT_EQ(*r.per_class[0], 0.5);
  EXPECT_FALSE(r.per_class[1].has_value());
}

TEST(MeanIou, PooledOverTheSet) {
  OccupancyMap a(2, 2), b(2, 2);
  a.set(0, 0);
  b.set(0, 0);
  b.set(0, 1);
  // Image 1 perfect (1 px), image 2 predicts only 1 of 2 px: pooled 2/3.
  const std::vector<std::int32_t> p1{1, 0, 0, 0}, p2{1, 0, 0, 0};
  EXPECT_NEAR(mean_iou({p1, p2}, {single(a, 0), single(b, 0)}).mean, 2.0 / 3.0, 1e-15);
}

TEST(MeanIou, GrowingTowardsTruthNeverHurts) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    auto layout = oracle::random_layout(rng, 8, 8, 2, 3);
    if (layout.empty()) continue;
    const auto gt = label_map(layout);
    std::vector<std::int32_t> pred(gt.size(), 0);
    double last = -1.0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      pred[i] = gt[i];
      const auto r = mean_iou({pred}, {layout});
      ASSERT_GE(r.mean, last - 1e-15);
      ASSERT_LE(r.mean, 1.0);
      last = r.mean;
    }
    EXPECT_EQ(last, 1.0);
  }
}

TEST(MeanIou, NoForegroundIsUndefined) {
  SemanticLayout empty(3, 3, 2);
  try {
    mean_iou({std::vector<std::int32_t>(9, 0)}, {empty});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidInput);
  }
}

TEST(Providers, RandomProjectionIsDeterministicAndSeparates) {
  const auto data = synth_dataset(400, 32, 3, 4);
  std::vector<Canvas> a, b, noise;
  Rng rng(1);
  for (int i = 0; i < 400; ++i) (i % 2 ? a : b).push_back(data.image(i));
  for (int i = 0; i < 200; ++i) {
    Canvas c(32, 32, 3);
    for (auto& v : c.data()) v = static_cast<float>(rng.uniform(-1, 1));
    noise.push_back(c);
  }
  RandomProjectionFeatures p(16, 7);
  EXPECT_EQ(p.features(a), p.features(a));
  EXPECT_LE(fid(a, a, p), 1e-6);
  EXPECT_LT(5.0 * fid(a, b, p), fid(a, noise, p));
  EXPECT_EQ(p.describe().at("kind"), "random-projection");
}

TEST(Providers, ClassifierCheckpointRoundTrip) {
  const auto data = synth_dataset(24, 32, 3, 9);
  EvalTrainOptions opts;
  opts.steps = 3;
  opts.batch = 4;
  const auto ckpt = train_feature_classifier(data, opts);
  const auto back = deserialize_checkpoint(serialize_checkpoint(ckpt));
  ClassifierFeatures f(back);
  const auto feats = f.features({data.image(0), data.image(1), data.image(2)});
  EXPECT_EQ(feats.rows(), 3);
  EXPECT_EQ(feats.cols(), f.dim());
  EXPECT_TRUE(make_feature_provider("synthetic-classifier", back)->features({data.image(0)}).isApprox(feats.topRows(1), 1e-5));
  EXPECT_THROW(make_feature_provider("synthetic-classifier", std::nullopt), Error);
  EXPECT_THROW(make_feature_provider("inception", std::nullopt), Error);
}

TEST(Providers, SegmenterOutputsLabels) {
  const auto data = synth_dataset(24, 32, 3, 9);
  EvalTrainOptions opts;
  opts.steps = 3;
  opts.batch = 4;
  FcnSegmenter seg(train_segmenter(data, opts));
  const auto labels = seg.segment(data.image(0));
  ASSERT_EQ(labels.size(), 32u * 32u);
  for (auto v : labels) {
    EXPECT_GE(v, 0);
    EXPECT_LE(v, 3);
  }
  EXPECT_THROW(ClassifierFeatures(train_segmenter(data, opts)), Error);
}

}  // namespace
}  // namespace layercomp
