// Copyright 2026 The raxelkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "raxelkit/geom.hpp"
#include "raxelkit/registration.hpp"

namespace raxelkit {
namespace {

using std::numbers::pi;

std::vector<Vec3> transform(const Pose& p, const std::vector<Vec3>& pts) {
  std::vector<Vec3> out;
  for (const auto& x : pts) out.push_back(p.rotation() * x + p.translation());
  return out;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

TEST(Register, IdentityOnEqualSets) {
  std::mt19937_64 rng(1);
  const auto pts = testing::random_points(rng, 100);
  const RegistrationResult r = register_rigid(pts, pts);
  EXPECT_LT(r.rms_residual, 1e-12);
  EXPECT_LT(testing::axis_angle_distance(r.pose.rotation(), Mat3::Identity()), 1e-12);
  EXPECT_LT(r.pose.translation().norm(), 1e-12);
}

TEST(Register, RecoversKnownTransform) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    std::mt19937_64 rng(s);
    const auto source = testing::random_points(rng, 100);
    const Pose truth = random_pose(s + 500, pi, 3.0);
    const RegistrationResult r = register_rigid(transform(truth, source), source);
    EXPECT_LT(testing::axis_angle_distance(r.pose.rotation(), truth.rotation()), 1e-10);
    EXPECT_LT((r.pose.translation() - truth.translation()).norm(), 1e-10);
    EXPECT_NEAR(r.pose.rotation().determinant(), 1.0, 1e-12);
  }
}

TEST(Register, RejectsDegenerateInputs) {
  const std::vector<Vec3> line = {Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(2, 2, 2)};
  EXPECT_EQ(code_of([&] { register_rigid(line, line); }), ErrorCode::DegenerateGeometry);
  const std::vector<Vec3> same(5, Vec3(1, 2, 3));
  EXPECT_EQ(code_of([&] { register_rigid(same, same); }), ErrorCode::DegenerateGeometry);
  const std::vector<Vec3> two = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  EXPECT_EQ(code_of([&] { register_rigid(two, two); }), ErrorCode::DegenerateGeometry);
  const std::vector<Vec3> three = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  EXPECT_EQ(code_of([&] { register_rigid(three, line); }), ErrorCode::DegenerateGeometry);
  EXPECT_EQ(code_of([&] { register_rigid(three, two); }), ErrorCode::ShapeMismatch);
}

TEST(Register, ThreeNonCollinearPointsSuffice) {
  const std::vector<Vec3> tri = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  const Pose truth(rot_z(0.7) * rot_x(0.2), Vec3(1, -2, 3));
  const RegistrationResult r = register_rigid(transform(truth, tri), tri);
  EXPECT_LT(testing::axis_angle_distance(r.pose.rotation(), truth.rotation()), 1e-10);
  EXPECT_LT((r.pose.translation() - truth.translation()).norm(), 1e-10);
}

TEST(RegisterWeighted, UniformMatchesUnweighted) {
  std::mt19937_64 rng(3);
  const auto source = testing::random_points(rng, 50);
  auto target = transform(random_pose(9, 2.0, 1.0), source);
  for (auto& p : target) p += testing::random_vector(rng, 3, 0.05);
  const RegistrationResult a = register_rigid(target, source);
  const std::vector<double> w(50, 1.0);
  const RegistrationResult b = register_weighted(target, source, w);
  EXPECT_LT((a.pose.matrix() - b.pose.matrix()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(a.rms_residual, b.rms_residual, 1e-12);
}

TEST(RegisterWeighted, ZeroWeightOutlierIsIgnored) {
  std::mt19937_64 rng(4);
  const auto source = testing::random_points(rng, 30);
  const Pose truth = random_pose(44, pi, 2.0);
  auto target = transform(truth, source);
  target[7] += Vec3(50, -30, 10);
  std::vector<double> w(30, 1.0);
  w[7] = 0.0;
  const RegistrationResult r = register_weighted(target, source, w);
  EXPECT_LT(testing::axis_angle_distance(r.pose.rotation(), truth.rotation()), 1e-10);
  EXPECT_LT((r.pose.translation() - truth.translation()).norm(), 1e-10);
}

TEST(RegisterWeighted, Errors) {
  std::mt19937_64 rng(5);
  const auto pts = testing::random_points(rng, 4);
  const std::vector<double> zeros(4, 0.0);
  EXPECT_EQ(code_of([&] { register_weighted(pts, pts, zeros); }), ErrorCode::NonPositiveWeightSum);
  const std::vector<double> short_w(3, 1.0);
  EXPECT_EQ(code_of([&] { register_weighted(pts, pts, short_w); }), ErrorCode::ShapeMismatch);
  const std::vector<double> negative = {1, 1, -1, 1};
  EXPECT_EQ(code_of([&] { register_weighted(pts, pts, negative); }), ErrorCode::InvalidArgument);
}

TEST(RegisterProperty, NoRandomPerturbationDoesBetter) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const auto source = testing::random_points(rng, 5);
    const auto target = testing::random_points(rng, 5);
    const RegistrationResult r = register_rigid(target, source);
    const double best = testing::rigid_objective(target, source, r.pose.rotation(), r.pose.translation());
    for (int k = 0; k < 10000; ++k) {
      const double scale = k % 2 == 0 ? 1e-3 : 0.3;
      const Vec3 axis(g(rng), g(rng), g(rng));
      const Mat3 dr = Eigen::AngleAxisd(scale * axis.norm(), axis.normalized()).toRotationMatrix();
      const Vec3 dt = scale * Vec3(g(rng), g(rng), g(rng));
      const double other =
          testing::rigid_objective(target, source, dr * r.pose.rotation(), r.pose.translation() + dt);
      ASSERT_LE(best, other + 1e-12);
    }
  }
}

TEST(RegisterProperty, Equivariance) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    std::mt19937_64 rng(s + 100);
    const auto source = testing::random_points(rng, 40);
    auto target = testing::random_points(rng, 40);
    const Pose a = random_pose(s + 900, pi, 4.0);
    const RegistrationResult base = register_rigid(target, source);
    const RegistrationResult moved = register_rigid(transform(a, target), source);
    const Pose expected = compose(a, base.pose);
    EXPECT_LT((moved.pose.matrix() - expected.matrix()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(RegisterProperty, ReflectionNeverReturned) {
  std::mt19937_64 rng(7);
  const auto source = testing::random_points(rng, 60);
  std::vector<Vec3> target;
  for (const auto& p : source) target.push_back(Vec3(-p.x(), p.y(), p.z()));
  const RegistrationResult r = register_rigid(target, source);
  EXPECT_NEAR(r.pose.rotation().determinant(), 1.0, 1e-12);
  EXPECT_GT(r.rms_residual, 0.0);
}

TEST(RegisterProperty, NoiseErrorShrinksWithPointCount) {
  std::vector<double> medians;
  for (std::size_t n : {10u, 100u, 1000u}) {
    std::vector<double> errs;
    for (int trial = 0; trial < 50; ++trial) {
      std::mt19937_64 rng(1000 * n + trial);
      const auto source = testing::random_points(rng, n);
      const Pose truth = random_pose(trial, pi, 1.0);
      auto target = transform(truth, source);
      for (auto& p : target) p += testing::random_vector(rng, 3, 0.05);
      errs.push_back(testing::axis_angle_distance(register_rigid(target, source).pose.rotation(), truth.rotation()));
    }
    std::nth_element(errs.begin(), errs.begin() + 25, errs.end());
    medians.push_back(errs[25]);
  }
  EXPECT_GT(medians[0], medians[1]);
  EXPECT_GT(medians[1], medians[2]);
}

}  // namespace
}  // namespace raxelkit
