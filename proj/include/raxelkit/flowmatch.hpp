// Copyright 2026 The raxelkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "raxelkit/error.hpp"

namespace raxelkit::flow {

using State = Eigen::VectorXd;

/// Norms below this make the cosine term undefined.
inline constexpr double kDirectionEpsilon = 1e-12;
inline constexpr double kDefaultCosineWeight = 0.5;

/// Endpoints of one linear probability path and the time along it.
class FlowBatch {
 public:
  FlowBatch(State x0, State x1, double t) : x0_(std::move(x0)), x1_(std::move(x1)), t_(t) {
    if (x0_.size() != x1_.size()) {
      throw Error(ErrorCode::ShapeMismatch, "x0 and x1 differ in length");
    }
    if (!(t >= 0.0 && t <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "t must lie in [0, 1]");
    }
  }

  const State& x0() const noexcept { return x0_; }
  const State& x1() const noexcept { return x1_; }
  double t() const noexcept { return t_; }
  Eigen::Index size() const noexcept { return x0_.size(); }

 private:
  State x0_;
  State x1_;
  double t_;
};

struct LossReport {
  double total = 0.0;
  double mse = 0.0;
  double cosine_term = 0.0;
  double lambda = kDefaultCosineWeight;
};

/// x_t = (1 - t) x0 + t x1.
inline State interpolate(const FlowBatch& b) { return (1.0 - b.t()) * b.x0() + b.t() * b.x1(); }

/// u = x1 - x0, constant along the path.
inline State target_velocity(const FlowBatch& b) { return b.x1() - b.x0(); }

/// Summed squared error plus lambda (1 - cos(prediction, u)). A zero-norm
/// prediction or target scores the neutral cosine penalty lambda.
inline LossReport loss(const State& prediction, const FlowBatch& batch, double lambda = kDefaultCosineWeight) {
  if (prediction.size() != batch.size()) {
    throw Error(ErrorCode::ShapeMismatch, "prediction length does not match the batch");
  }
  if (!(lambda >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "lambda must be non-negative");
  }
  const State u = target_velocity(batch);
  LossReport r;
  r.lambda = lambda;
  r.mse = (prediction - u).squaredNorm();
  const double pn = prediction.norm();
  const double un = u.norm();
  if (pn < kDirectionEpsilon || un < kDirectionEpsilon) {
    r.cosine_term = lambda;
  } else {
    const double cosine = std::clamp(prediction.dot(u) / (pn * un), -1.0, 1.0);
    r.cosine_term = lambda * (1.0 - cosine);
  }
  r.total = r.mse + r.cosine_term;
  return r;
}

/// Analytic d(total)/d(prediction).
inline State loss_gradient(const State& prediction, const FlowBatch& batch, double lambda = kDefaultCosineWeight) {
  if (prediction.size() != batch.size()) {
    throw Error(ErrorCode::ShapeMismatch, "prediction length does not match the batch");
  }
  const State u = target_velocity(batch);
  const double pn = prediction.norm();
  const double un = u.norm();
  if (pn < kDirectionEpsilon || un < kDirectionEpsilon) {
    throw Error(ErrorCode::DegenerateDirection, "cosine gradient undefined for a zero-norm vector");
  }
  State grad = 2.0 * (prediction - u);
  if (lambda != 0.0) {
    const double dot = prediction.dot(u);
    grad -= (lambda / pn) * (u / un - (dot / (pn * pn * un)) * prediction);
  }
  return grad;
}

/// Half-open index range [begin, end) of one token group in the state.
struct GroupSpan {
  Eigen::Index begin = 0;
  Eigen::Index end = 0;
};

/// Per-group flag: frozen groups stay pinned at their initial (data) values.
struct FreezeMask {
  std::vector<bool> frozen;
};

/// Uniform-step Euler integration of dx/dt = velocity(x, t) over [0, 1].
/// Frozen groups are re-pinned after every step. `velocity` is called in
/// step order, once per step.
template <typename VelocityFn>
State euler_sample(const State& x_init, VelocityFn&& velocity, int steps, const FreezeMask& mask,
                   const std::vector<GroupSpan>& groups) {
  if (steps < 1) {
    throw Error(ErrorCode::InvalidArgument, "steps must be at least 1");
  }
  if (mask.frozen.size() != groups.size()) {
    throw Error(ErrorCode::ShapeMismatch, "freeze mask has " + std::to_string(mask.frozen.size()) +
                                              " entries for " + std::to_string(groups.size()) + " groups");
  }
  Eigen::Index cursor = 0;
  for (const auto& g : groups) {
    if (g.begin != cursor || g.end < g.begin) {
      throw Error(ErrorCode::ShapeMismatch, "token groups must partition the state contiguously");
    }
    cursor = g.end;
  }
  if (!groups.empty() && cursor != x_init.size()) {
    throw Error(ErrorCode::ShapeMismatch, "token groups do not cover the state");
  }

  const double h = 1.0 / steps;
  State x = x_init;
  for (int k = 0; k < steps; ++k) {
    const double t = k * h;
    const State v = velocity(std::as_const(x), t);
    if (v.size() != x.size()) {
      throw Error(ErrorCode::ShapeMismatch, "velocity field changed the state length");
    }
    x += h * v;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (mask.frozen[g]) {
        const Eigen::Index len = groups[g].end - groups[g].begin;
        x.segment(groups[g].begin, len) = x_init.segment(groups[g].begin, len);
      }
    }
  }
  return x;
}

/// Overload without token groups: the whole state is integrated.
template <typename VelocityFn>
State euler_sample(const State& x_init, VelocityFn&& velocity, int steps) {
  return euler_sample(x_init, std::forward<VelocityFn>(velocity), steps, FreezeMask{}, {});
}

/// Latent length after 4x temporal compression of `frame_count` frames,
/// which must be of the form 4 (n - 1) + 1.
inline int latent_length(int frame_count) {
  if (frame_count < 1 || (frame_count - 1) % 4 != 0) {
    throw Error(ErrorCode::InvalidFrameCount,
                std::to_string(frame_count) + " frames is not of the form 4(n - 1) + 1");
  }
  return (frame_count - 1) / 4 + 1;
}

}  // namespace raxelkit::flow
