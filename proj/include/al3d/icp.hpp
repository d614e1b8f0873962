#pragma once

#include "al3d/geometry.hpp"
#include "al3d/kdtree.hpp"

namespace al3d {

struct IcpParams {
  double max_correspondence_dist = 2.0;  // meters
  int max_iterations = 50;
  double convergence_delta = 1e-4;  // translation norm + rotation angle
  int min_correspondences = 3;
  // Pairs farther than trim_multiplier x median (or trim_floor, whichever is
  // larger) are dropped each iteration. Partially overlapping views otherwise
  // drag the estimate toward the covered region.
  double trim_multiplier = 3.0;
  double trim_floor = 0.02;  // meters
};

struct IcpResult {
  Pose transform;  // maps source points into the target frame
  double mean_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int correspondences = 0;
  bool converged = false;
};

/// Point-to-point ICP (rigid, no scale). Correspondences are nearest
/// neighbors within the cap; the update step is the SVD alignment of the
/// matched pairs. Returns the best transform found even when not converged.
IcpResult icp_point_to_point(const PointCloud& source, const SpatialIndex& target,
                             const IcpParams& params = {},
                             const Pose& init = Pose::identity());

/// Least-squares rigid alignment of paired points (source -> target).
Pose align_rigid(const PointCloud& source, const PointCloud& target);

}  // namespace al3d
