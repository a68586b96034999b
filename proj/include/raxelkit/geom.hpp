// Copyright 2026 The raxelkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "raxelkit/error.hpp"

namespace raxelkit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rotations whose orthonormality drift exceeds this are polar-projected.
inline constexpr double kOrthonormalDrift = 1e-9;
/// Rotations drifting further than this are rejected outright.
inline constexpr double kOrthonormalTolerance = 1e-6;

inline Mat3 rot_x(double radians) { return Eigen::AngleAxisd(radians, Vec3::UnitX()).toRotationMatrix(); }
inline Mat3 rot_y(double radians) { return Eigen::AngleAxisd(radians, Vec3::UnitY()).toRotationMatrix(); }
inline Mat3 rot_z(double radians) { return Eigen::AngleAxisd(radians, Vec3::UnitZ()).toRotationMatrix(); }

inline double deg2rad(double degrees) { return degrees * std::numbers::pi / 180.0; }
inline double rad2deg(double radians) { return radians * 180.0 / std::numbers::pi; }

namespace detail {

inline double orthonormal_drift(const Mat3& r) {
  return ((r.transpose() * r) - Mat3::Identity()).cwiseAbs().maxCoeff();
}

// Nearest rotation in the Frobenius sense.
inline Mat3 polar_project(const Mat3& r) {
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 correction = Mat3::Identity();
  correction(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  return svd.matrixU() * correction * svd.matrixV().transpose();
}

}  // namespace detail

/// Camera-to-world rigid transform. The rotation is kept orthonormal with
/// det = +1; inputs drifting by more than kOrthonormalDrift are
/// polar-projected and inputs beyond `tolerance` are rejected.
class Pose {
 public:
  Pose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

  Pose(const Mat3& rotation, const Vec3& translation, double tolerance = kOrthonormalTolerance)
      : rotation_(rotation), translation_(translation) {
    if (!rotation.allFinite() || !translation.allFinite()) {
      throw Error(ErrorCode::InvalidPose, "non-finite pose entries");
    }
    const double drift = detail::orthonormal_drift(rotation_);
    if (drift > tolerance) {
      throw Error(ErrorCode::InvalidPose,
                  "rotation is not orthonormal (drift " + std::to_string(drift) + ")");
    }
    if (rotation_.determinant() <= 0.0) {
      throw Error(ErrorCode::InvalidPose, "rotation has non-positive determinant");
    }
    if (drift > kOrthonormalDrift) rotation_ = detail::polar_project(rotation_);
  }

  static Pose identity() { return Pose(); }
  static Pose from_rotation(const Mat3& r) { return Pose(r, Vec3::Zero()); }
  static Pose from_translation(const Vec3& t) { return Pose(Mat3::Identity(), t); }

  const Mat3& rotation() const noexcept { return rotation_; }
  const Vec3& translation() const noexcept { return translation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation_;
    m.topRightCorner<3, 1>() = translation_;
    return m;
  }

  bool operator==(const Pose&) const = default;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

/// Applying `b` then `a`.
inline Pose compose(const Pose& a, const Pose& b) {
  return Pose(a.rotation() * b.rotation(), a.rotation() * b.translation() + a.translation());
}

inline Pose inverse(const Pose& p) {
  const Mat3 rt = p.rotation().transpose();
  return Pose(rt, -(rt * p.translation()));
}

/// Angle of the relative rotation between `a` and `b`, in [0, pi].
///
/// Evaluated as atan2(sin, cos) of the relative rotation. This is the same
/// function as the clamped arccos of (trace - 1) / 2 on rotation matrices but
/// keeps full relative precision for angles near 0 and pi, where arccos loses
/// about half the significant digits.
inline double geodesic_rotation_distance(const Mat3& a, const Mat3& b) {
  const Mat3 rel = a.transpose() * b;
  const double cos_angle = 0.5 * (rel.trace() - 1.0);
  const Vec3 axis_sin(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  const double sin_angle = 0.5 * axis_sin.norm();
  return std::atan2(sin_angle, std::clamp(cos_angle, -1.0, 1.0));
}

inline double geodesic_rotation_distance(const Pose& a, const Pose& b) {
  return geodesic_rotation_distance(a.rotation(), b.rotation());
}

/// Deterministic random pose: uniform axis, angle uniform in
/// [0, rotation_scale], translation components uniform in
/// [-translation_scale, translation_scale].
inline Pose random_pose(std::uint64_t seed, double rotation_scale, double translation_scale) {
  if (!(rotation_scale >= 0.0) || !(translation_scale >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "random_pose scales must be non-negative");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double z = 2.0 * unit(rng) - 1.0;
  const double phi = 2.0 * std::numbers::pi * unit(rng);
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  const Vec3 axis(s * std::cos(phi), s * std::sin(phi), z);
  const double angle = rotation_scale * unit(rng);
  Vec3 t = Vec3::Zero();
  for (int k = 0; k < 3; ++k) {
    t[k] = translation_scale * (2.0 * unit(rng) - 1.0);
  }
  const Mat3 r = angle == 0.0 ? Mat3::Identity() : Eigen::AngleAxisd(angle, axis).toRotationMatrix();
  return Pose(r, t);
}

/// Pinhole intrinsics with the image size they refer to.
class Intrinsics {
 public:
  Intrinsics(double fx, double fy, double cx, double cy, int width, int height)
      : fx_(fx), fy_(fy), cx_(cx), cy_(cy), width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
      throw Error(ErrorCode::InvalidIntrinsics, "image dimensions must be positive");
    }
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
      throw Error(ErrorCode::InvalidIntrinsics, "focal lengths must be positive and finite");
    }
    if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) {
      throw Error(ErrorCode::InvalidIntrinsics, "principal point must lie inside the image");
    }
  }

  /// Principal point at the image center.
  static Intrinsics centered(double fx, double fy, int width, int height) {
    return Intrinsics(fx, fy, 0.5 * width, 0.5 * height, width, height);
  }

  /// Square pixels with the given horizontal field of view (degrees).
  static Intrinsics from_fov(double horizontal_fov_deg, int width, int height) {
    if (!(horizontal_fov_deg > 0.0 && horizontal_fov_deg < 180.0)) {
      throw Error(ErrorCode::InvalidIntrinsics, "field of view must be in (0, 180) degrees");
    }
    const double f = 0.5 * width / std::tan(0.5 * deg2rad(horizontal_fov_deg));
    return centered(f, f, width, height);
  }

  double fx() const noexcept { return fx_; }
  double fy() const noexcept { return fy_; }
  double cx() const noexcept { return cx_; }
  double cy() const noexcept { return cy_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  Mat3 matrix() const {
    Mat3 k;
    k << fx_, 0.0, cx_, 0.0, fy_, cy_, 0.0, 0.0, 1.0;
    return k;
  }

  bool operator==(const Intrinsics&) const = default;

 private:
  double fx_, fy_, cx_, cy_;
  int width_, height_;
};

struct CameraFrame {
  Intrinsics intrinsics;
  Pose pose;
  std::size_t index = 0;

  bool operator==(const CameraFrame&) const = default;
};

/// Ordered camera frames with a designated reference frame.
class Trajectory {
 public:
  Trajectory(std::vector<CameraFrame> frames, std::size_t reference_index)
      : frames_(std::move(frames)), reference_index_(reference_index) {
    if (frames_.empty()) {
      throw Error(ErrorCode::InvalidTrajectory, "trajectory needs at least one frame");
    }
    if (reference_index_ >= frames_.size()) {
      throw Error(ErrorCode::IndexOutOfRange, "reference index " + std::to_string(reference_index_) +
                                                  " outside [0, " + std::to_string(frames_.size()) + ")");
    }
    std::unordered_set<std::size_t> seen;
    for (const auto& f : frames_) {
      if (!seen.insert(f.index).second) {
        throw Error(ErrorCode::InvalidTrajectory, "duplicate frame index " + std::to_string(f.index));
      }
    }
  }

  const std::vector<CameraFrame>& frames() const noexcept { return frames_; }
  std::size_t size() const noexcept { return frames_.size(); }
  std::size_t reference_index() const noexcept { return reference_index_; }
  const CameraFrame& operator[](std::size_t i) const { return frames_[i]; }
  const CameraFrame& reference() const { return frames_[reference_index_]; }

  bool operator==(const Trajectory&) const = default;

 private:
  std::vector<CameraFrame> frames_;
  std::size_t reference_index_;
};

/// Re-expresses every pose relative to frames[reference]; that frame becomes
/// exactly the identity.
inline Trajectory canonicalize(const Trajectory& t, std::size_t reference) {
  if (reference >= t.size()) {
    throw Error(ErrorCode::IndexOutOfRange, "canonicalize reference " + std::to_string(reference) +
                                                " outside [0, " + std::to_string(t.size()) + ")");
  }
  const Pose to_reference = inverse(t[reference].pose);
  std::vector<CameraFrame> frames = t.frames();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    frames[i].pose = i == reference ? Pose::identity() : compose(to_reference, frames[i].pose);
  }
  return Trajectory(std::move(frames), reference);
}

inline Trajectory canonicalize(const Trajectory& t) { return canonicalize(t, t.reference_index()); }

}  // namespace raxelkit
