// Copyright 2026 The raxelkit Authors
// SPDX-License-Identifier: Apache-2.0

// Encodes a short arc as raxel images, decodes it back, and prints the
// recovered poses and focal lengths next to the originals.

#include <cstdio>

#include "raxelkit/raxelkit.hpp"

int main() {
  using namespace raxelkit;
  const Intrinsics k = Intrinsics::from_fov(60.0, 832, 480);
  const Trajectory truth = eval::generate_trajectory(eval::TrajectoryKind::ArcLeft, 9, k, 2.0, 0);

  const std::vector<RaxelImage> images = encode_trajectory(truth);
  const auto geometry = ImageGeometry::centered(k.width(), k.height());
  const auto decoded = decode_trajectory(images, truth.reference_index(), geometry);

  std::printf("frame  rot_err(rad)  trans_err   fx_hat      fy_hat\n");
  for (const auto& r : decoded) {
    if (!r.ok()) {
      std::printf("%5zu  %s\n", r.frame, r.message.c_str());
      continue;
    }
    const Pose& gt = truth[r.frame].pose;
    std::printf("%5zu  %.3e     %.3e   %.6f  %.6f\n", r.frame, geodesic_rotation_distance(r.decoded->pose, gt),
                (r.decoded->pose.translation() - gt.translation()).norm(), r.decoded->fx_hat, r.decoded->fy_hat);
  }
  std::printf("true focal: %.6f\n", k.fx());
  return 0;
}
