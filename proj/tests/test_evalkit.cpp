// Copyright 2026 The raxelkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "oracles.hpp"
#include "raxelkit/evalkit.hpp"

namespace raxelkit::eval {
namespace {

using std::numbers::pi;

const Intrinsics kSmall = Intrinsics::from_fov(60, 128, 96);

Trajectory with_poses(const std::vector<Pose>& poses, std::size_t ref = 0) {
  std::vector<CameraFrame> frames;
  for (std::size_t i = 0; i < poses.size(); ++i) frames.push_back({kSmall, poses[i], i});
  return Trajectory(frames, ref);
}

TEST(PoseErrors, ZeroOnIdenticalInput) {
  const Trajectory t = canonicalize(random_trajectory(6, kSmall, 1, pi, 2.0));
  const PoseErrorReport r = pose_errors(t, t);
  EXPECT_EQ(r.mean_rotation_error, 0.0);
  EXPECT_EQ(r.mean_translation_error, 0.0);
  for (double e : r.rotation_error) EXPECT_EQ(e, 0.0);
}

TEST(PoseErrors, MeanOverNonReferenceFrames) {
  const std::vector<Pose> gt(5, Pose::identity());
  std::vector<Pose> pred = gt;
  pred[2] = Pose::from_rotation(rot_z(pi / 6));
  const PoseErrorReport r = pose_errors(with_poses(pred), with_poses(gt));
  EXPECT_NEAR(r.mean_rotation_error, (pi / 6) / 4, 1e-12);
  EXPECT_NEAR(r.rotation_error[2], pi / 6, 1e-12);
}

TEST(PoseErrors, MatchesAxisAngleOracle) {
  const Trajectory a = canonicalize(random_trajectory(10, kSmall, 2, pi, 3.0));
  const Trajectory b = canonicalize(random_trajectory(10, kSmall, 3, pi, 3.0));
  const PoseErrorReport r = pose_errors(a, b);
  double rot_sum = 0.0, trans_sum = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_NEAR(r.rotation_error[i], testing::axis_angle_distance(a[i].pose.rotation(), b[i].pose.rotation()), 1e-10);
    EXPECT_NEAR(r.translation_error[i], (a[i].pose.translation() - b[i].pose.translation()).norm(), 1e-12);
    if (i != 0) rot_sum += r.rotation_error[i], trans_sum += r.translation_error[i];
  }
  EXPECT_NEAR(r.mean_rotation_error, rot_sum / 9, 1e-12);
  EXPECT_NEAR(r.mean_translation_error, trans_sum / 9, 1e-12);
}

TEST(PoseErrors, Errors) {
  const Trajectory a = with_poses({Pose(), Pose()});
  try {
    pose_errors(a, with_poses({Pose()}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
  }
  try {
    pose_errors(a, with_poses({Pose(), Pose()}, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ReferenceMismatch);
  }
}

TEST(Mrra, Examples) {
  const Trajectory t = random_trajectory(7, kSmall, 4, pi, 1.0);
  for (double tau : {0.001, 1.0, 30.0}) EXPECT_EQ(mrra(t, t, tau), 1.0);

  const Trajectory gt2 = with_poses({Pose(), Pose()});
  EXPECT_EQ(mrra(with_poses({Pose(), Pose::from_rotation(rot_x(pi / 4))}), gt2, 30.0), 0.0);

  const Trajectory gt3 = with_poses({Pose(), Pose(), Pose()});
  const Trajectory pred3 = with_poses({Pose(), Pose::from_rotation(rot_y(deg2rad(20))),
                                       Pose::from_rotation(rot_y(deg2rad(-20)))});
  // Pair errors: (0,1) 20, (0,2) 20, (1,2) 40 degrees.
  EXPECT_NEAR(mrra(pred3, gt3, 30.0), 2.0 / 3.0, 1e-15);
}

TEST(Mrra, ThresholdIsInclusive) {
  const Trajectory gt = with_poses({Pose(), Pose()});
  const Trajectory pred = with_poses({Pose(), Pose::from_rotation(rot_z(deg2rad(30) * (1 - 1e-12)))});
  EXPECT_EQ(mrra(pred, gt, 30.0), 1.0);
}

TEST(Mrra, BruteForcePairsSymmetricAndReferenceFree) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Trajectory a = random_trajectory(8, kSmall, 10 + s, 0.6, 1.0);
    const Trajectory b = random_trajectory(8, kSmall, 30 + s, 0.6, 1.0);
    int good = 0, total = 0;
    for (std::size_t i = 0; i < 8; ++i) {
      for (std::size_t j = i + 1; j < 8; ++j) {
        const Mat3 ra = a[i].pose.rotation().transpose() * a[j].pose.rotation();
        const Mat3 rb = b[i].pose.rotation().transpose() * b[j].pose.rotation();
        good += testing::axis_angle_distance(ra, rb) <= deg2rad(30) ? 1 : 0;
        ++total;
      }
    }
    const double m = mrra(a, b, 30.0);
    EXPECT_DOUBLE_EQ(m, static_cast<double>(good) / total);
    EXPECT_DOUBLE_EQ(mrra(b, a, 30.0), m);
    EXPECT_DOUBLE_EQ(mrra(canonicalize(a, 5), canonicalize(b, 5), 30.0), m);
  }
}

TEST(Mrra, Errors) {
  const Trajectory one = with_poses({Pose()});
  try {
    mrra(one, one, 30);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewFrames);
  }
  EXPECT_THROW(mrra(with_poses({Pose(), Pose()}), with_poses({Pose(), Pose(), Pose()}), 30), Error);
}

TEST(GenerateTrajectory, StillAndLine) {
  const Trajectory still = generate_trajectory(TrajectoryKind::Still, 6, kSmall, 2.0, 9);
  for (const auto& f : still.frames()) EXPECT_EQ(f.pose, Pose::identity());
  const Trajectory line = generate_trajectory(TrajectoryKind::Line, 5, kSmall, 1.0, 0);
  for (int k = 0; k < 5; ++k) {
    EXPECT_EQ(line[k].pose.rotation(), Mat3::Identity());
    EXPECT_NEAR((line[k].pose.translation() - Vec3(0.25 * k, 0, 0)).norm(), 0.0, 1e-15);
  }
  EXPECT_EQ(line.reference_index(), 0u);
}

TEST(GenerateTrajectory, ArcsHaveUniformAngularSpeedAndFaceTheCenter) {
  for (auto kind : {TrajectoryKind::ArcLeft, TrajectoryKind::ArcRight, TrajectoryKind::Orbit}) {
    const Trajectory t = generate_trajectory(kind, 21, kSmall, 2.0, 5);
    const double step = testing::axis_angle_distance(t[0].pose.rotation(), t[1].pose.rotation());
    EXPECT_GT(step, 0.0);
    for (std::size_t k = 1; k + 1 < t.size(); ++k) {
      EXPECT_NEAR(testing::axis_angle_distance(t[k].pose.rotation(), t[k + 1].pose.rotation()), step, 1e-9);
    }
    for (const auto& f : t.frames()) {
      const Vec3 forward = f.pose.rotation().col(2);
      const Vec3 to_center = Vec3(0, 0, 2) - f.pose.translation();
      EXPECT_NEAR(to_center.norm(), 2.0, 1e-12);
      EXPECT_LT((forward - to_center.normalized()).norm(), 1e-12);
    }
  }
  const Trajectory left = generate_trajectory(TrajectoryKind::ArcLeft, 5, kSmall, 2.0, 0);
  const Trajectory right = generate_trajectory(TrajectoryKind::ArcRight, 5, kSmall, 2.0, 0);
  EXPECT_LT(left[4].pose.translation().x(), 0.0);
  EXPECT_GT(right[4].pose.translation().x(), 0.0);
}

TEST(GenerateTrajectory, DeterministicPerSeed) {
  const Trajectory a = generate_trajectory(TrajectoryKind::Orbit, 8, kSmall, 2.0, 3);
  const Trajectory b = generate_trajectory(TrajectoryKind::Orbit, 8, kSmall, 2.0, 3);
  const Trajectory c = generate_trajectory(TrajectoryKind::Orbit, 8, kSmall, 2.0, 4);
  for (std::size_t k = 0; k < 8; ++k) EXPECT_EQ(a[k].pose, b[k].pose);
  EXPECT_FALSE(a[0].pose == c[0].pose);
  EXPECT_THROW(generate_trajectory(TrajectoryKind::Line, 0, kSmall, 1.0, 0), Error);
}

TEST(ReverseTrajectory, InvolutionAndSingleFrame) {
  const Trajectory t(random_trajectory(6, kSmall, 7, pi, 2.0).frames(), 2);
  const Trajectory rr = reverse_trajectory(reverse_trajectory(t));
  EXPECT_EQ(rr.reference_index(), 2u);
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_EQ(rr[k].pose, t[k].pose);
    EXPECT_EQ(rr[k].index, t[k].index);
  }
  const Trajectory one = with_poses({random_pose(1, 1, 1)});
  EXPECT_EQ(reverse_trajectory(one)[0].pose, one[0].pose);
}

TEST(ReverseTrajectory, LineReversesAndRelativesInvert) {
  const Trajectory line = generate_trajectory(TrajectoryKind::Line, 5, kSmall, 1.0, 0);
  const Trajectory rev = reverse_trajectory(line);
  EXPECT_EQ(rev.reference_index(), 4u);
  EXPECT_EQ(rev[4].pose, line[0].pose);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(rev[i].index, i);
    EXPECT_EQ(rev[i].pose.translation(), line[4 - i].pose.translation());
    for (std::size_t j = 0; j < 5; ++j) {
      const Eigen::Matrix4d fwd = line[i].pose.matrix().inverse() * line[j].pose.matrix();
      const Eigen::Matrix4d back = rev[4 - j].pose.matrix().inverse() * rev[4 - i].pose.matrix();
      EXPECT_LT((fwd * back - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(ReverseTrajectory, PreservesRelativeAngleMultiset) {
  const Trajectory t = random_trajectory(7, kSmall, 8, pi, 1.0);
  const Trajectory r = reverse_trajectory(t);
  auto angles = [](const Trajectory& x) {
    std::multiset<double> s;
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = i + 1; j < x.size(); ++j) s.insert(geodesic_rotation_distance(x[i].pose, x[j].pose));
    return s;
  };
  EXPECT_EQ(angles(t), angles(r));
}

TEST(Perturb, ZeroMagnitudesLeaveImageUnchanged) {
  const RaxelImage img = encode_raxel(kSmall, random_pose(3, 1.0, 1.0));
  EXPECT_EQ(perturb(img, {PerturbationKind::GaussianPerPixel, 0.0, 5}), img);
  EXPECT_EQ(perturb(img, {PerturbationKind::PixelDropout, 0.0, 5}), img);
  const RaxelImage q = perturb(img, {PerturbationKind::UniformQuantize, 16.0, 5});
  for (int c = 0; c < 3; ++c) {
    double lo = 1e300, hi = -1e300;
    for (const auto& p : img.pixels()) lo = std::min(lo, p[c]), hi = std::max(hi, p[c]);
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_LE(std::abs(q[i][c] - img[i][c]), (hi - lo) / 65536.0);
  }
}

TEST(Perturb, GaussianIsDeterministicAndScaled) {
  const RaxelImage img = ray_grid(Intrinsics::from_fov(60, 832, 480));
  const RaxelImage a = perturb(img, {PerturbationKind::GaussianPerPixel, 0.01, 42});
  EXPECT_EQ(a, perturb(img, {PerturbationKind::GaussianPerPixel, 0.01, 42}));
  EXPECT_FALSE(a == perturb(img, {PerturbationKind::GaussianPerPixel, 0.01, 43}));
  double sum = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < img.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const double d = a[i][c] - img[i][c];
      sum += d;
      sq += d * d;
    }
  }
  const double n = 3.0 * img.size();
  EXPECT_NEAR(sum / n, 0.0, 1e-4);
  EXPECT_NEAR(std::sqrt(sq / n), 0.01, 1e-4);
}

TEST(Perturb, EightBitQuantizationDeviationBound) {
  const RaxelImage img = encode_raxel(Intrinsics::from_fov(70, 416, 240), random_pose(9, pi, 2.0));
  const RaxelImage q = perturb(img, {PerturbationKind::UniformQuantize, 8.0, 0});
  for (int c = 0; c < 3; ++c) {
    double lo = 1e300, hi = -1e300;
    for (const auto& p : img.pixels()) lo = std::min(lo, p[c]), hi = std::max(hi, p[c]);
    const double bound = (hi - lo) / 256.0 / 2.0;
    std::set<double> levels;
    for (std::size_t i = 0; i < img.size(); ++i) {
      ASSERT_LE(std::abs(q[i][c] - img[i][c]), bound * (1 + 1e-12));
      levels.insert(q[i][c]);
    }
    EXPECT_LE(levels.size(), 256u);
  }
}

TEST(Perturb, DropoutReplacesExactFractionWithMean) {
  const RaxelImage img = encode_raxel(kSmall, random_pose(10, 1.0, 1.0));
  Vec3 mean = Vec3::Zero();
  for (const auto& p : img.pixels()) mean += p;
  mean /= static_cast<double>(img.size());
  const RaxelImage d = perturb(img, {PerturbationKind::PixelDropout, 0.25, 1});
  std::size_t changed = 0;
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (!(d[i] == img[i])) {
      ++changed;
      EXPECT_LT((d[i] - mean).norm(), 1e-15);
    }
  }
  EXPECT_EQ(changed, img.size() / 4);
  EXPECT_EQ(d, perturb(img, {PerturbationKind::PixelDropout, 0.25, 1}));
}

TEST(Perturb, SpecValidation) {
  const RaxelImage img = ray_grid(kSmall);
  EXPECT_THROW(perturb(img, {PerturbationKind::GaussianPerPixel, -0.1, 0}), Error);
  EXPECT_THROW(perturb(img, {PerturbationKind::UniformQuantize, 0.0, 0}), Error);
  EXPECT_THROW(perturb(img, {PerturbationKind::UniformQuantize, 17.0, 0}), Error);
  EXPECT_THROW(perturb(img, {PerturbationKind::UniformQuantize, 7.5, 0}), Error);
  EXPECT_THROW(perturb(img, {PerturbationKind::PixelDropout, 1.0, 0}), Error);
}

TEST(MixSeed, DistinctAndStable) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 20; ++s)
    for (std::uint64_t k = 0; k < 50; ++k) seen.insert(mix_seed(s, k));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(mix_seed(3, 4), mix_seed(3, 4));
}

TEST(CycleConsistency, CleanRunIsExact) {
  const Trajectory t = generate_trajectory(TrajectoryKind::Orbit, 21, Intrinsics::from_fov(60, 832, 480), 2.0, 2);
  const CycleReport r = cycle_consistency_run(t, {PerturbationKind::GaussianPerPixel, 0.0, 0});
  for (double e : r.errors.rotation_error) EXPECT_LT(e, 1e-9);
  EXPECT_EQ(r.mrra30, 1.0);
  EXPECT_LT(r.reencode_residual, 1e-8);
}

TEST(CycleConsistency, StillTrajectoryNoiseFloorIsSmall) {
  const Trajectory t = generate_trajectory(TrajectoryKind::Still, 5, kSmall, 2.0, 0);
  const CycleReport r = cycle_consistency_run(t, {PerturbationKind::GaussianPerPixel, 0.01, 1});
  EXPECT_GT(r.errors.mean_rotation_error, 0.0);
  EXPECT_LT(r.errors.mean_rotation_error, 0.01);
}

TEST(CycleConsistency, MedianErrorMonotoneInSigma) {
  SweepSetup setup;
  setup.width = 256;
  setup.height = 192;
  setup.frames = 9;
  for (auto kind : {TrajectoryKind::Orbit, TrajectoryKind::Line}) {
    double previous = 0.0;
    for (double sigma : {0.001, 0.005, 0.01, 0.05}) {
      std::vector<double> errs;
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        errs.push_back(run_sweep_cell(setup, {kind, sigma, seed}).errors.mean_rotation_error);
      }
      const double m = median(errs);
      EXPECT_GE(m, previous) << to_string(kind) << " sigma " << sigma;
      previous = m;
    }
  }
}

TEST(FocalMismatch, TranslationAbsorbsTheBias) {
  const Intrinsics k = Intrinsics::from_fov(60, 320, 240);
  const Pose pose = random_pose(3, pi, 2.0);
  const auto pts = focal_mismatch_sweep(k, pose, {0.8, 0.9, 1.0, 1.1, 1.25});
  ASSERT_EQ(pts.size(), 5u);
  EXPECT_LT(pts[2].translation_error, 1e-12);
  EXPECT_LT(pts[2].fx_relative_error, 1e-12);
  // Symmetric grid around the principal point: rotation stays unbiased.
  for (const auto& p : pts) EXPECT_LT(p.rotation_error, 1e-12);
  EXPECT_GT(pts[0].translation_error, pts[1].translation_error);
  EXPECT_GT(pts[1].translation_error, 1e-3);
  EXPECT_GT(pts[4].translation_error, pts[3].translation_error);
  EXPECT_GT(pts[3].translation_error, 1e-3);
  EXPECT_GT(pts[0].fx_relative_error, pts[1].fx_relative_error);
  EXPECT_GT(pts[4].fx_relative_error, pts[3].fx_relative_error);
  EXPECT_THROW(focal_mismatch_sweep(k, pose, {0.0}), Error);
}

TEST(FocalMismatch, BiasLiesAlongTheOpticalAxis) {
  const Intrinsics k = Intrinsics::from_fov(60, 320, 240);
  const Pose pose = random_pose(9, pi, 2.0);
  const RaxelImage frame = encode_raxel(Intrinsics(k.fx() * 1.2, k.fy() * 1.2, k.cx(), k.cy(), 320, 240), pose);
  const Vec3 shift = recover_pose(frame, ray_grid(k)).pose.translation() - pose.translation();
  const Vec3 axis = pose.rotation().col(2);
  EXPECT_LT(shift.cross(axis).norm(), 1e-9 * shift.norm());
}

TEST(Median, LowerMiddle) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.0);
  EXPECT_THROW(median({}), Error);
}

TEST(KindNames, RoundTrip) {
  for (auto k : {TrajectoryKind::ArcLeft, TrajectoryKind::ArcRight, TrajectoryKind::Orbit, TrajectoryKind::Line,
                 TrajectoryKind::Still}) {
    EXPECT_EQ(parse_trajectory_kind(to_string(k)), k);
  }
  for (auto k : {PerturbationKind::GaussianPerPixel, PerturbationKind::UniformQuantize, PerturbationKind::PixelDropout}) {
    EXPECT_EQ(parse_perturbation_kind(to_string(k)), k);
  }
  EXPECT_FALSE(parse_trajectory_kind("spiral").has_value());
}

}  // namespace
}  // namespace raxelkit::eval
