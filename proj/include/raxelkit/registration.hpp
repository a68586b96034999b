// Copyright 2026 The raxelkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "raxelkit/error.hpp"
#include "raxelkit/geom.hpp"

namespace raxelkit {

/// Singular-value ratio below which the alignment is considered unobservable.
inline constexpr double kDegenerateCondition = 1e-9;

using PointSpan = std::span<const Vec3>;

struct RegistrationResult {
  Pose pose;
  double rms_residual = 0.0;
  /// Second-largest over largest singular value of the cross-covariance.
  double condition = 0.0;
};

namespace detail {

inline void check_point_sets(PointSpan target, PointSpan source) {
  if (target.size() != source.size()) {
    throw Error(ErrorCode::ShapeMismatch, "point sets differ in length (" + std::to_string(target.size()) +
                                              " vs " + std::to_string(source.size()) + ")");
  }
  if (target.size() < 3) {
    throw Error(ErrorCode::DegenerateGeometry, "rigid registration needs at least 3 points");
  }
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (!target[i].allFinite() || !source[i].allFinite()) {
      throw Error(ErrorCode::InvalidArgument, "non-finite coordinate at point " + std::to_string(i));
    }
  }
}

// Weighted Kabsch in centroid form. `weights` empty means uniform. Sums run
// in index order so the result is bit-stable.
inline RegistrationResult kabsch(PointSpan target, PointSpan source, std::span<const double> weights) {
  const std::size_t n = target.size();
  const bool weighted = !weights.empty();

  double weight_sum = 0.0;
  Vec3 target_sum = Vec3::Zero();
  Vec3 source_sum = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weighted ? weights[i] : 1.0;
    weight_sum += w;
    target_sum += w * target[i];
    source_sum += w * source[i];
  }
  if (!(weight_sum > 0.0)) {
    throw Error(ErrorCode::NonPositiveWeightSum, "weights must have a positive sum");
  }
  const Vec3 target_mean = target_sum / weight_sum;
  const Vec3 source_mean = source_sum / weight_sum;

  Mat3 cov = Mat3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weighted ? weights[i] : 1.0;
    cov += w * (source[i] - source_mean) * (target[i] - target_mean).transpose();
  }

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  const double condition = sv[0] > 0.0 ? sv[1] / sv[0] : 0.0;
  if (!(condition >= kDegenerateCondition)) {
    throw Error(ErrorCode::DegenerateGeometry,
                "cross-covariance is rank deficient (condition " + std::to_string(condition) + ")");
  }

  const Mat3& u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Mat3 rotation = v * d * u.transpose();
  const Vec3 translation = target_mean - rotation * source_mean;

  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weighted ? weights[i] : 1.0;
    sq += w * (target[i] - (rotation * source[i] + translation)).squaredNorm();
  }
  return {Pose(rotation, translation), std::sqrt(sq / weight_sum), condition};
}

}  // namespace detail

/// Least-squares rigid transform mapping `source` onto `target`
/// (target ~ R source + T), corresponded index-wise. Reflections are never
/// returned.
inline RegistrationResult register_rigid(PointSpan target, PointSpan source) {
  detail::check_point_sets(target, source);
  return detail::kabsch(target, source, {});
}

/// Weighted variant minimizing sum w_i |target_i - (R source_i + T)|^2.
inline RegistrationResult register_weighted(PointSpan target, PointSpan source, std::span<const double> weights) {
  detail::check_point_sets(target, source);
  if (weights.size() != target.size()) {
    throw Error(ErrorCode::ShapeMismatch, "one weight per point required");
  }
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::InvalidArgument, "weights must be finite and non-negative");
    }
  }
  return detail::kabsch(target, source, weights);
}

}  // namespace raxelkit
