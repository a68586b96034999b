// Copyright 2026 The raxelkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "raxelkit/error.hpp"
#include "raxelkit/geom.hpp"
#include "raxelkit/ray_encode.hpp"
#include "raxelkit/registration.hpp"

namespace raxelkit {

/// Rays closer than this to the image axes are excluded from focal ratios.
inline constexpr double kFocalRayEpsilon = 1e-6;
/// Focal recovery fails when fewer than this fraction of pixels survive.
inline constexpr double kMinInlierFraction = 0.1;

/// Full-resolution image dimensions and the principal point assumed during
/// focal recovery.
struct ImageGeometry {
  int width = 0;
  int height = 0;
  double cx = 0.0;
  double cy = 0.0;

  static ImageGeometry centered(int width, int height) {
    return {width, height, 0.5 * width, 0.5 * height};
  }
};

struct FocalEstimate {
  double fx = 0.0;
  double fy = 0.0;
  double inlier_fraction = 0.0;
};

struct DecodedFrame {
  Pose pose;
  double fx_hat = 0.0;
  double fy_hat = 0.0;
  double pose_residual = 0.0;
  double inlier_fraction = 0.0;
};

/// Outcome for one frame of decode_trajectory. Exactly one of `decoded` and
/// `error` is set.
struct FrameDecodeResult {
  std::size_t frame = 0;
  std::optional<DecodedFrame> decoded;
  std::optional<ErrorCode> error;
  std::string message;

  bool ok() const noexcept { return decoded.has_value(); }
};

namespace detail {

inline std::span<const Vec3> as_points(const RaxelImage& image) { return image.pixels(); }

// Lower middle order statistic; `values` is reordered.
inline double lower_median(std::vector<double>& values) {
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

}  // namespace detail

/// Rigid pose carrying the reference bundle onto the target bundle.
inline RegistrationResult recover_pose(const RaxelImage& target, const RaxelImage& reference) {
  if (!target.same_shape(reference)) {
    throw Error(ErrorCode::ShapeMismatch, "raxel images have different grid shapes");
  }
  return register_rigid(detail::as_points(target), detail::as_points(reference));
}

/// Median-of-ratios focal lengths from a raxel image and its pose. Local rays
/// are R^T (raxel - T); pixel coordinates are block centers relative to the
/// principal point in `geometry`.
inline FocalEstimate recover_focal(const RaxelImage& target, const Pose& pose, const ImageGeometry& geometry) {
  const auto [rows, cols] = raxel_grid_shape(geometry.height, geometry.width);
  if (rows != target.height() || cols != target.width()) {
    throw Error(ErrorCode::ShapeMismatch, "raxel grid does not match the image dimensions");
  }
  const Mat3 rt = pose.rotation().transpose();
  const Vec3& origin = pose.translation();

  std::vector<double> ratios_x;
  std::vector<double> ratios_y;
  ratios_x.reserve(target.size());
  ratios_y.reserve(target.size());
  for (int i = 0; i < rows; ++i) {
    const double v = raxel_v(i) - geometry.cy;
    for (int j = 0; j < cols; ++j) {
      const double u = raxel_u(j) - geometry.cx;
      Vec3 local = rt * (target.at(i, j) - origin);
      const double n = local.norm();
      if (!(n > 0.0) || !std::isfinite(n)) continue;
      local /= n;
      if (!(local.z() > kFocalRayEpsilon)) continue;
      if (std::abs(local.x()) > kFocalRayEpsilon) ratios_x.push_back(u * local.z() / local.x());
      if (std::abs(local.y()) > kFocalRayEpsilon) ratios_y.push_back(v * local.z() / local.y());
    }
  }

  const double total = static_cast<double>(target.size());
  const double fraction = static_cast<double>(std::min(ratios_x.size(), ratios_y.size())) / total;
  if (ratios_x.empty() || ratios_y.empty() || fraction < kMinInlierFraction) {
    throw Error(ErrorCode::InsufficientInliers,
                "only " + std::to_string(fraction * 100.0) + "% of pixels usable for focal recovery");
  }
  FocalEstimate est{detail::lower_median(ratios_x), detail::lower_median(ratios_y), fraction};
  if (!(est.fx > 0.0) || !(est.fy > 0.0)) {
    throw Error(ErrorCode::DegenerateGeometry, "recovered focal length is not positive");
  }
  return est;
}

/// Decodes every frame independently against images[reference_index]. The
/// reference pose is set to identity rather than solved. Failed frames are
/// reported in place; they do not abort the others.
inline std::vector<FrameDecodeResult> decode_trajectory(std::span<const RaxelImage> images,
                                                        std::size_t reference_index,
                                                        const ImageGeometry& geometry) {
  if (images.empty()) {
    throw Error(ErrorCode::InvalidArgument, "no raxel images to decode");
  }
  if (reference_index >= images.size()) {
    throw Error(ErrorCode::IndexOutOfRange, "reference index " + std::to_string(reference_index) +
                                                " outside [0, " + std::to_string(images.size()) + ")");
  }
  for (const auto& image : images) {
    if (!image.same_shape(images.front())) {
      throw Error(ErrorCode::ShapeMismatch, "raxel images have different grid shapes");
    }
  }

  const RaxelImage& reference = images[reference_index];
  std::vector<FrameDecodeResult> results(images.size());
  for (std::size_t k = 0; k < images.size(); ++k) {
    FrameDecodeResult& result = results[k];
    result.frame = k;
    try {
      DecodedFrame frame;
      if (k != reference_index) {
        const RegistrationResult reg = recover_pose(images[k], reference);
        frame.pose = reg.pose;
        frame.pose_residual = reg.rms_residual;
      }
      const FocalEstimate focal = recover_focal(images[k], frame.pose, geometry);
      frame.fx_hat = focal.fx;
      frame.fy_hat = focal.fy;
      frame.inlier_fraction = focal.inlier_fraction;
      result.decoded = frame;
    } catch (const Error& e) {
      result.error = e.code();
      result.message = "frame " + std::to_string(k) + ": " + e.what();
    }
  }
  return results;
}

/// Assembles decoded frames into a trajectory with the principal point from
/// `geometry`. Throws the first frame error if any frame failed.
inline Trajectory to_trajectory(std::span<const FrameDecodeResult> results, std::size_t reference_index,
                                const ImageGeometry& geometry) {
  std::vector<CameraFrame> frames;
  frames.reserve(results.size());
  for (const auto& r : results) {
    if (!r.ok()) throw Error(*r.error, r.message);
    frames.push_back({Intrinsics(r.decoded->fx_hat, r.decoded->fy_hat, geometry.cx, geometry.cy, geometry.width,
                                 geometry.height),
                      r.decoded->pose, r.frame});
  }
  return Trajectory(std::move(frames), reference_index);
}

}  // namespace raxelkit
