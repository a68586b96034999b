// Copyright 2026 The raxelkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "raxelkit/error.hpp"
#include "raxelkit/geom.hpp"

namespace raxelkit {

/// Dense row-major grid of fixed-size per-pixel vectors.
template <int Channels>
class RayGrid {
 public:
  using Pixel = Eigen::Matrix<double, Channels, 1>;
  static constexpr int kChannels = Channels;

  RayGrid() = default;
  RayGrid(int height, int width) : height_(height), width_(width) {
    if (height <= 0 || width <= 0) {
      throw Error(ErrorCode::ShapeMismatch, "ray grid dimensions must be positive");
    }
    pixels_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), Pixel::Zero());
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return pixels_.size(); }
  bool same_shape(const RayGrid& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  Pixel& at(int row, int col) { return pixels_[static_cast<std::size_t>(row) * width_ + col]; }
  const Pixel& at(int row, int col) const { return pixels_[static_cast<std::size_t>(row) * width_ + col]; }
  Pixel& operator[](std::size_t i) { return pixels_[i]; }
  const Pixel& operator[](std::size_t i) const { return pixels_[i]; }

  std::span<Pixel> pixels() noexcept { return pixels_; }
  std::span<const Pixel> pixels() const noexcept { return pixels_; }

  bool operator==(const RayGrid&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<Pixel> pixels_;
};

/// Per-pixel world ray direction plus camera origin (d + o).
using RaxelImage = RayGrid<3>;

enum class RayMapKind { Plucker, Raymap };

/// Six-channel comparison encodings: Plucker [d, d x o] or raymap [o, d].
struct RayMap6 {
  RayGrid<6> grid;
  RayMapKind kind = RayMapKind::Plucker;
};

/// Raxel grid size for a full-resolution image: floor(H/2) x floor(W/2).
inline std::pair<int, int> raxel_grid_shape(int image_height, int image_width) {
  const int rows = image_height / 2;
  const int cols = image_width / 2;
  if (rows <= 0 || cols <= 0) {
    throw Error(ErrorCode::ShapeMismatch, "image of " + std::to_string(image_width) + "x" +
                                              std::to_string(image_height) + " has an empty raxel grid");
  }
  return {rows, cols};
}

/// Full-resolution pixel coordinate of raxel (row, col): the center of its
/// 2x2 block, (u, v) = (2 col + 1, 2 row + 1).
inline double raxel_u(int col) { return 2.0 * col + 1.0; }
inline double raxel_v(int row) { return 2.0 * row + 1.0; }

/// Unit camera-space direction of full-resolution pixel (u, v).
inline Vec3 camera_direction(const Intrinsics& k, double u, double v) {
  const Vec3 x((u - k.cx()) / k.fx(), (v - k.cy()) / k.fy(), 1.0);
  return x / x.norm();
}

/// Unit camera-space ray for every raxel-grid pixel. Shared by all encoders.
inline RaxelImage ray_grid(const Intrinsics& k) {
  const auto [rows, cols] = raxel_grid_shape(k.height(), k.width());
  RaxelImage grid(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      grid.at(i, j) = camera_direction(k, raxel_u(j), raxel_v(i));
    }
  }
  return grid;
}

/// Raxels from precomputed camera rays.
inline RaxelImage encode_raxel(const RaxelImage& camera_rays, const Pose& pose_rel) {
  RaxelImage out(camera_rays.height(), camera_rays.width());
  const Mat3& r = pose_rel.rotation();
  const Vec3& o = pose_rel.translation();
  for (std::size_t p = 0; p < out.size(); ++p) {
    out[p] = r * camera_rays[p] + o;
  }
  return out;
}

inline RaxelImage encode_raxel(const Intrinsics& k, const Pose& pose_rel) {
  return encode_raxel(ray_grid(k), pose_rel);
}

inline RaxelImage encode_raxel(const CameraFrame& frame, const Pose& pose_rel) {
  return encode_raxel(frame.intrinsics, pose_rel);
}

inline RayMap6 encode_plucker(const Intrinsics& k, const Pose& pose_rel) {
  const RaxelImage rays = ray_grid(k);
  RayMap6 out{RayGrid<6>(rays.height(), rays.width()), RayMapKind::Plucker};
  const Vec3& t = pose_rel.translation();
  for (std::size_t p = 0; p < rays.size(); ++p) {
    const Vec3 d = pose_rel.rotation() * rays[p];
    out.grid[p].head<3>() = d;
    out.grid[p].tail<3>() = d.cross(t);
  }
  return out;
}

inline RayMap6 encode_plucker(const CameraFrame& frame, const Pose& pose_rel) {
  return encode_plucker(frame.intrinsics, pose_rel);
}

inline RayMap6 encode_raymap(const Intrinsics& k, const Pose& pose_rel) {
  const RaxelImage rays = ray_grid(k);
  RayMap6 out{RayGrid<6>(rays.height(), rays.width()), RayMapKind::Raymap};
  for (std::size_t p = 0; p < rays.size(); ++p) {
    out.grid[p].head<3>() = pose_rel.translation();
    out.grid[p].tail<3>() = pose_rel.rotation() * rays[p];
  }
  return out;
}

inline RayMap6 encode_raymap(const CameraFrame& frame, const Pose& pose_rel) {
  return encode_raymap(frame.intrinsics, pose_rel);
}

/// Canonicalizes to the trajectory's reference frame and encodes every frame
/// as a raxel image. Frames with the same intrinsics share one ray grid.
inline std::vector<RaxelImage> encode_trajectory(const Trajectory& trajectory) {
  const Trajectory canonical = canonicalize(trajectory);
  std::vector<RaxelImage> images;
  images.reserve(canonical.size());
  std::optional<Intrinsics> cached_for;
  RaxelImage cached;
  for (const auto& frame : canonical.frames()) {
    if (!cached_for || !(*cached_for == frame.intrinsics)) {
      cached = ray_grid(frame.intrinsics);
      cached_for = frame.intrinsics;
    }
    images.push_back(encode_raxel(cached, frame.pose));
  }
  return images;
}

}  // namespace raxelkit
