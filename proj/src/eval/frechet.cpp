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
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "layercomp/error.hpp"
#include "layercomp/eval.hpp"

namespace layercomp {

namespace {

constexpr double kSymmetryTol = 1e-8;
constexpr double kNegativeTol = 1e-6;
constexpr double kJitter = 1e-10;

struct Eigen2 {
  Eigen::VectorXd values;  // clamped at zero
  Eigen::MatrixXd vectors;
};

// Eigendecomposition of a symmetric PSD matrix with the tolerance checks.
Eigen2 psd_eigen(const Eigen::MatrixXd& m, const char* what) {
  require(m.rows() == m.cols(), ErrorCode::kInvalidInput, std::string(what) + " is not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol * scale) {
    std::ostringstream msg;
    msg << what << " is not symmetric (max |m - m^T| = " << asym << ")";
    fail(ErrorCode::kNumerical, msg.str());
  }
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) {
    sym.diagonal().array() += kJitter;
    solver.compute(sym);
    require(solver.info() == Eigen::Success, ErrorCode::kNumerical,
            std::string("eigendecomposition of ") + what + " failed");
  }
  Eigen2 out{solver.eigenvalues(), solver.eigenvectors()};
  const double min_eig = out.values.minCoeff();
  if (min_eig < -kNegativeTol * scale) {
    std::ostringstream msg;
    msg << what << " is not positive semi-definite (min eigenvalue " << min_eig << ")";
    fail(ErrorCode::kNumerical, msg.str());
  }
  out.values = out.values.cwiseMax(0.0);
  return out;
}

Eigen::MatrixXd from_eigen(const Eigen2& e, const Eigen::VectorXd& values) {
  return e.vectors * values.asDiagonal() * e.vectors.transpose();
}

struct ProductRoot {
  Eigen::MatrixXd sqrt_a;
  Eigen::MatrixXd sqrt_a_pinv;
  Eigen2 inner;  // eigen data of sqrt(a) b sqrt(a)
};

ProductRoot product_root(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorCode::kInvalidInput,
          "covariance dimensions differ");
  const auto ea = psd_eigen(a, "first covariance");
  psd_eigen(b, "second covariance");
  const Eigen::VectorXd roots = ea.values.cwiseSqrt();
  const double cutoff = std::max(1e-300, roots.maxCoeff() * 1e-12);
  Eigen::VectorXd inv = roots;
  for (Eigen::Index i = 0; i < inv.size(); ++i) inv[i] = roots[i] > cutoff ? 1.0 / roots[i] : 0.0;
  ProductRoot out;
  out.sqrt_a = from_eigen(ea, roots);
  out.sqrt_a_pinv = from_eigen(ea, inv);
  const Eigen::MatrixXd inner = out.sqrt_a * b * out.sqrt_a;
  out.inner = psd_eigen(0.5 * (inner + inner.transpose()), "covariance product");
  return out;
}

}  // namespace

GaussianStats fit_gaussian(const Eigen::MatrixXd& features) {
  require(features.rows() >= 2, ErrorCode::kInvalidInput, "need at least two feature rows");
  GaussianStats s;
  s.mean = features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = features.rowwise() - s.mean.transpose();
  s.cov = centered.transpose() * centered / static_cast<double>(features.rows() - 1);
  s.cov = 0.5 * (s.cov + s.cov.transpose());
  return s;
}

Eigen::MatrixXd product_sqrt(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const auto r = product_root(a, b);
  return r.sqrt_a * from_eigen(r.inner, r.inner.values.cwiseSqrt()) * r.sqrt_a_pinv;
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  require(a.dim() == b.dim() && a.cov.rows() == a.dim() && b.cov.rows() == b.dim(),
          ErrorCode::kInvalidInput, "Gaussian dimensions differ");
  const auto r = product_root(a.cov, b.cov);
  const double trace_root = r.inner.values.cwiseSqrt().sum();
  const double d = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2.0 * trace_root;
  return std::max(0.0, d);
}

double fid(const std::vector<Canvas>& real, const std::vector<Canvas>& fake,
           const FeatureProvider& provider) {
  return frechet_distance(fit_gaussian(provider.features(real)), fit_gaussian(provider.features(fake)));
}

}  // namespace layercomp
