// Copyright 2026 The raxelkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "raxelkit/error.hpp"
#include "raxelkit/geom.hpp"
#include "raxelkit/ray_decode.hpp"
#include "raxelkit/ray_encode.hpp"

namespace raxelkit::eval {

/// SplitMix64 finalizer; derives independent stream seeds from (seed, index).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// --- metrics ---------------------------------------------------------------

struct PoseErrorReport {
  std::vector<double> rotation_error;     // radians, per frame
  std::vector<double> translation_error;  // scene units, per frame
  double mean_rotation_error = 0.0;
  double mean_translation_error = 0.0;
};

/// Per-frame geodesic rotation error and translation distance. Means run
/// over non-reference frames (zero when there are none).
inline PoseErrorReport pose_errors(const Trajectory& predicted, const Trajectory& ground_truth) {
  if (predicted.size() != ground_truth.size()) {
    throw Error(ErrorCode::LengthMismatch, "trajectories have " + std::to_string(predicted.size()) + " and " +
                                               std::to_string(ground_truth.size()) + " frames");
  }
  if (predicted.reference_index() != ground_truth.reference_index()) {
    throw Error(ErrorCode::ReferenceMismatch, "trajectories use different reference frames");
  }
  PoseErrorReport r;
  const std::size_t n = predicted.size();
  r.rotation_error.resize(n);
  r.translation_error.resize(n);
  double rot_sum = 0.0;
  double trans_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r.rotation_error[i] = geodesic_rotation_distance(predicted[i].pose, ground_truth[i].pose);
    r.translation_error[i] = (predicted[i].pose.translation() - ground_truth[i].pose.translation()).norm();
    if (i != predicted.reference_index()) {
      rot_sum += r.rotation_error[i];
      trans_sum += r.translation_error[i];
    }
  }
  if (n > 1) {
    r.mean_rotation_error = rot_sum / static_cast<double>(n - 1);
    r.mean_translation_error = trans_sum / static_cast<double>(n - 1);
  }
  return r;
}

/// Fraction of unordered frame pairs whose relative-rotation error is at
/// most tau_degrees.
inline double mrra(const Trajectory& predicted, const Trajectory& ground_truth, double tau_degrees) {
  if (predicted.size() != ground_truth.size()) {
    throw Error(ErrorCode::LengthMismatch, "trajectories differ in length");
  }
  if (predicted.size() < 2) {
    throw Error(ErrorCode::TooFewFrames, "relative rotation accuracy needs at least two frames");
  }
  const double tau = deg2rad(tau_degrees);
  const std::size_t n = predicted.size();
  std::size_t correct = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Mat3 rel_pred = predicted[i].pose.rotation().transpose() * predicted[j].pose.rotation();
      const Mat3 rel_gt = ground_truth[i].pose.rotation().transpose() * ground_truth[j].pose.rotation();
      if (geodesic_rotation_distance(rel_pred, rel_gt) <= tau) ++correct;
      ++pairs;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(pairs);
}

// --- trajectories ----------------------------------------------------------

enum class TrajectoryKind { ArcLeft, ArcRight, Orbit, Line, Still };

/// Total sweep of the arc families.
inline constexpr double kArcSpan = std::numbers::pi / 3.0;

inline std::string_view to_string(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::ArcLeft: return "arcleft";
    case TrajectoryKind::ArcRight: return "arcright";
    case TrajectoryKind::Orbit: return "orbit";
    case TrajectoryKind::Line: return "line";
    case TrajectoryKind::Still: return "still";
  }
  return "unknown";
}

inline std::optional<TrajectoryKind> parse_trajectory_kind(std::string_view s) {
  for (auto k : {TrajectoryKind::ArcLeft, TrajectoryKind::ArcRight, TrajectoryKind::Orbit, TrajectoryKind::Line,
                 TrajectoryKind::Still}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

namespace detail {

// Camera on a horizontal circle of `radius` around (0, 0, radius), yawed by
// `theta` so it keeps looking at that center. theta = 0 is the identity.
inline Pose look_at_center(double theta, double radius) {
  const Mat3 r = rot_y(theta);
  const Vec3 center(0.0, 0.0, radius);
  return Pose(r, center - radius * (r * Vec3::UnitZ()));
}

}  // namespace detail

/// Smooth synthetic camera paths with shared intrinsics and reference 0.
/// Arcs sweep kArcSpan around the scene center (ArcLeft toward -x, ArcRight
/// toward +x); Orbit closes the full circle starting at a seed-chosen phase;
/// Line moves `extent` along +x; Still repeats the identity.
inline Trajectory generate_trajectory(TrajectoryKind kind, int frame_count, const Intrinsics& intrinsics,
                                      double extent, std::uint64_t seed) {
  if (frame_count < 1) {
    throw Error(ErrorCode::InvalidArgument, "frame_count must be at least 1");
  }
  if (!(extent >= 0.0) || !std::isfinite(extent)) {
    throw Error(ErrorCode::InvalidArgument, "radius/extent must be finite and non-negative");
  }
  const double denom = frame_count > 1 ? static_cast<double>(frame_count - 1) : 1.0;
  double phase = 0.0;
  if (kind == TrajectoryKind::Orbit) {
    std::mt19937_64 rng(seed);
    phase = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
  }
  std::vector<CameraFrame> frames;
  frames.reserve(frame_count);
  for (int k = 0; k < frame_count; ++k) {
    Pose pose;
    switch (kind) {
      case TrajectoryKind::ArcLeft: pose = detail::look_at_center(kArcSpan * k / denom, extent); break;
      case TrajectoryKind::ArcRight: pose = detail::look_at_center(-kArcSpan * k / denom, extent); break;
      case TrajectoryKind::Orbit:
        pose = detail::look_at_center(phase + 2.0 * std::numbers::pi * k / frame_count, extent);
        break;
      case TrajectoryKind::Line: pose = Pose::from_translation(Vec3(extent * k / denom, 0.0, 0.0)); break;
      case TrajectoryKind::Still: break;
    }
    frames.push_back({intrinsics, pose, static_cast<std::size_t>(k)});
  }
  return Trajectory(std::move(frames), 0);
}

/// Independent random poses per frame (reference 0), for stress tests.
inline Trajectory random_trajectory(int frame_count, const Intrinsics& intrinsics, std::uint64_t seed,
                                    double rotation_scale, double translation_scale) {
  if (frame_count < 1) throw Error(ErrorCode::InvalidArgument, "frame_count must be at least 1");
  std::vector<CameraFrame> frames;
  for (int k = 0; k < frame_count; ++k) {
    frames.push_back({intrinsics, random_pose(mix_seed(seed, k), rotation_scale, translation_scale),
                      static_cast<std::size_t>(k)});
  }
  return Trajectory(std::move(frames), 0);
}

/// Time reversal. Frame contents move; the sequence of index labels stays in
/// place, and the reference follows its physical frame. Involutive.
inline Trajectory reverse_trajectory(const Trajectory& t) {
  const std::size_t n = t.size();
  std::vector<CameraFrame> frames;
  frames.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    CameraFrame f = t[n - 1 - k];
    f.index = t[k].index;
    frames.push_back(f);
  }
  return Trajectory(std::move(frames), n - 1 - t.reference_index());
}

// --- perturbations ---------------------------------------------------------

enum class PerturbationKind { GaussianPerPixel, UniformQuantize, PixelDropout };

inline std::string_view to_string(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::GaussianPerPixel: return "gaussian";
    case PerturbationKind::UniformQuantize: return "quantize";
    case PerturbationKind::PixelDropout: return "dropout";
  }
  return "unknown";
}

inline std::optional<PerturbationKind> parse_perturbation_kind(std::string_view s) {
  for (auto k : {PerturbationKind::GaussianPerPixel, PerturbationKind::UniformQuantize,
                 PerturbationKind::PixelDropout}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

/// magnitude: sigma for Gaussian, bit depth for quantization, pixel fraction
/// for dropout.
struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::GaussianPerPixel;
  double magnitude = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    switch (kind) {
      case PerturbationKind::GaussianPerPixel:
        if (!(magnitude >= 0.0) || !std::isfinite(magnitude)) {
          throw Error(ErrorCode::InvalidArgument, "gaussian sigma must be finite and non-negative");
        }
        break;
      case PerturbationKind::UniformQuantize:
        if (!(magnitude >= 1.0 && magnitude <= 16.0) || magnitude != std::floor(magnitude)) {
          throw Error(ErrorCode::InvalidArgument, "quantization bits must be an integer in [1, 16]");
        }
        break;
      case PerturbationKind::PixelDropout:
        if (!(magnitude >= 0.0 && magnitude < 1.0)) {
          throw Error(ErrorCode::InvalidArgument, "dropout fraction must lie in [0, 1)");
        }
        break;
    }
  }
};

/// Applies a seeded perturbation. Quantization snaps each channel to the
/// centers of 2^bits equal bins spanning that channel's min-max range, so no
/// value moves by more than half a bin.
inline RaxelImage perturb(const RaxelImage& image, const PerturbationSpec& spec) {
  spec.validate();
  RaxelImage out = image;
  std::mt19937_64 rng(spec.seed);
  switch (spec.kind) {
    case PerturbationKind::GaussianPerPixel: {
      if (spec.magnitude == 0.0) break;
      std::normal_distribution<double> noise(0.0, spec.magnitude);
      for (auto& p : out.pixels()) {
        for (int c = 0; c < 3; ++c) p[c] += noise(rng);
      }
      break;
    }
    case PerturbationKind::UniformQuantize: {
      const double levels = std::ldexp(1.0, static_cast<int>(spec.magnitude));
      for (int c = 0; c < 3; ++c) {
        double lo = image[0][c];
        double hi = image[0][c];
        for (const auto& p : image.pixels()) {
          lo = std::min(lo, p[c]);
          hi = std::max(hi, p[c]);
        }
        const double step = (hi - lo) / levels;
        if (!(step > 0.0)) continue;
        for (auto& p : out.pixels()) {
          const double bin = std::min(std::floor((p[c] - lo) / step), levels - 1.0);
          p[c] = lo + (bin + 0.5) * step;
        }
      }
      break;
    }
    case PerturbationKind::PixelDropout: {
      const std::size_t n = image.size();
      const auto count = static_cast<std::size_t>(std::floor(spec.magnitude * static_cast<double>(n)));
      if (count == 0) break;
      Vec3 mean = Vec3::Zero();
      for (const auto& p : image.pixels()) mean += p;
      mean /= static_cast<double>(n);
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      // Partial Fisher-Yates: the first `count` slots are a uniform sample.
      for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(order[i], order[pick(rng)]);
        out[order[i]] = mean;
      }
      break;
    }
  }
  return out;
}

// --- cycle self-consistency ------------------------------------------------

struct CycleReport {
  PoseErrorReport errors;
  double mrra30 = 0.0;
  /// Mean per-pixel distance between the re-encoded decoded trajectory and
  /// the clean encoding of the ground truth.
  double reencode_residual = 0.0;
};

/// encode -> perturb -> decode -> compare -> re-encode. Frame k is perturbed
/// with seed mix_seed(spec.seed, k). Decode failures propagate.
inline CycleReport cycle_consistency_run(const Trajectory& ground_truth, const PerturbationSpec& spec) {
  spec.validate();
  const Trajectory canonical = canonicalize(ground_truth);
  const std::vector<RaxelImage> clean = encode_trajectory(canonical);

  std::vector<RaxelImage> noisy;
  noisy.reserve(clean.size());
  for (std::size_t k = 0; k < clean.size(); ++k) {
    PerturbationSpec frame_spec = spec;
    frame_spec.seed = mix_seed(spec.seed, k);
    noisy.push_back(perturb(clean[k], frame_spec));
  }

  const Intrinsics& k0 = canonical.reference().intrinsics;
  const ImageGeometry geometry = ImageGeometry::centered(k0.width(), k0.height());
  const auto results = decode_trajectory(noisy, canonical.reference_index(), geometry);
  std::vector<CameraFrame> frames;
  frames.reserve(results.size());
  for (std::size_t k = 0; k < results.size(); ++k) {
    if (!results[k].ok()) throw Error(*results[k].error, results[k].message);
    const auto& d = *results[k].decoded;
    frames.push_back({Intrinsics(d.fx_hat, d.fy_hat, geometry.cx, geometry.cy, geometry.width, geometry.height),
                      d.pose, canonical[k].index});
  }
  const Trajectory decoded(std::move(frames), canonical.reference_index());

  CycleReport report;
  report.errors = pose_errors(decoded, canonical);
  report.mrra30 = canonical.size() >= 2 ? mrra(decoded, canonical, 30.0) : 1.0;

  const std::vector<RaxelImage> reencoded = encode_trajectory(decoded);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < clean.size(); ++k) {
    if (!reencoded[k].same_shape(clean[k])) {
      throw Error(ErrorCode::ShapeMismatch, "re-encoded grid differs from the clean grid");
    }
    for (std::size_t p = 0; p < clean[k].size(); ++p) {
      sum += (reencoded[k][p] - clean[k][p]).norm();
    }
    count += clean[k].size();
  }
  report.reencode_residual = sum / static_cast<double>(count);
  return report;
}

// --- sweeps ----------------------------------------------------------------

/// Scene and sensor shared by every cell of a sweep.
struct SweepSetup {
  int frames = 21;
  int width = 832;  // full resolution; the raxel grid is 240 x 416
  int height = 480;
  double fov_degrees = 60.0;
  double radius = 2.0;
  PerturbationKind noise = PerturbationKind::GaussianPerPixel;
};

struct SweepCell {
  TrajectoryKind kind = TrajectoryKind::Orbit;
  double magnitude = 0.0;
  std::uint64_t seed = 0;
};

/// One sweep cell. The trajectory uses the cell seed too, so a cell is fully
/// determined by (setup, kind, magnitude, seed).
inline CycleReport run_sweep_cell(const SweepSetup& setup, const SweepCell& cell) {
  const Intrinsics k = Intrinsics::from_fov(setup.fov_degrees, setup.width, setup.height);
  const Trajectory t = generate_trajectory(cell.kind, setup.frames, k, setup.radius, cell.seed);
  return cycle_consistency_run(t, {setup.noise, cell.magnitude, cell.seed});
}

struct FocalMismatchPoint {
  double focal_ratio = 1.0;
  double rotation_error = 0.0;
  double translation_error = 0.0;
  double fx_relative_error = 0.0;
};

/// Decode bias when a frame's focal lengths are `ratio` times the reference
/// frame's. The reference bundle is built from `reference`; the frame is
/// encoded at `pose` with scaled focals and decoded against it.
inline std::vector<FocalMismatchPoint> focal_mismatch_sweep(const Intrinsics& reference, const Pose& pose,
                                                            const std::vector<double>& ratios) {
  const ImageGeometry geometry = ImageGeometry::centered(reference.width(), reference.height());
  const RaxelImage bundle = ray_grid(reference);
  std::vector<FocalMismatchPoint> out;
  out.reserve(ratios.size());
  for (double ratio : ratios) {
    if (!(ratio > 0.0)) throw Error(ErrorCode::InvalidArgument, "focal ratio must be positive");
    const Intrinsics k(reference.fx() * ratio, reference.fy() * ratio, reference.cx(), reference.cy(),
                       reference.width(), reference.height());
    const RaxelImage frame = encode_raxel(k, pose);
    const Pose got = recover_pose(frame, bundle).pose;
    const FocalEstimate f = recover_focal(frame, got, geometry);
    out.push_back({ratio, geodesic_rotation_distance(got, pose), (got.translation() - pose.translation()).norm(),
                   std::abs(f.fx / k.fx() - 1.0)});
  }
  return out;
}

/// Lower-middle median of a copy of `values`.
inline double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "median of an empty set");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

}  // namespace raxelkit::eval
