#pragma once

#include "al3d/geometry.hpp"
#include "al3d/icp.hpp"

namespace al3d {

/// Per-point motion between consecutive frames, world frame, meters/second.
struct FlowField {
  std::vector<Eigen::Vector3d> vectors;
  double dt = 0.1;
  /// 0 for points whose cluster registration failed (flow forced to zero).
  Mask confident;
};

/// Ground plane {p : normal.p = offset} with upward-oriented unit normal.
struct GroundModel {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double offset = 0.0;
  double clearance = 0.3;

  double signed_distance(const Point3& p) const { return normal.dot(p) - offset; }
};

struct GroundFitParams {
  double band_height = 1.0;      // candidate band above the lowest point
  double inlier_distance = 0.1;  // RANSAC inlier threshold, meters
  int iterations = 200;
  double min_inlier_ratio = 0.2;
  double min_normal_z = 0.7;     // rejects walls and facades as candidates
  double clearance = 0.3;
  std::uint64_t seed = 0x9e3779b97f4a7c15ull;
};

/// RANSAC plane over the lowest height band, least-squares refined on the
/// inliers. Throws when fewer than 50 points are given or no plane reaches
/// the inlier ratio.
GroundModel fit_ground(const PointCloud& points, const GroundFitParams& params = {});

/// 1 = kept (strictly above the plane by more than the clearance).
Mask remove_ground(const PointCloud& points, const GroundModel& model);

struct SceneFlowParams {
  double cluster_radius = 1.0;    // connected-component linking radius
  int min_cluster_points = 5;     // smaller clusters get zero flow
  double search_margin = 3.0;     // target gate: cluster radius + margin
  double residual_cap = 0.5;      // mean ICP residual above this = failed
  IcpParams icp;
};

/// Cluster-rigid flow: connected components of `frame`, each registered to
/// `next` with ICP; per-point flow is the cluster displacement over dt.
/// Clusters whose registration fails carry zero flow, flagged unconfident.
/// Inputs must be world-frame aligned and ground-removed. Throws on empty
/// frames or non-positive dt.
FlowField estimate_scene_flow(const PointCloud& frame, const PointCloud& next, double dt,
                              const SceneFlowParams& params = {});

/// Flow of the final frame of a sequence: registration against the previous
/// frame with every vector negated.
FlowField backward_flow_negated(const PointCloud& last, const PointCloud& prev, double dt,
                                const SceneFlowParams& params = {});

/// mask_i = (|v_i| >= eps_sf); eps_sf = 0 selects every point.
Mask speed_mask(const FlowField& flow, double eps_sf);

/// Connected components over the linking radius; labels are contiguous from
/// zero in discovery order.
std::vector<int> connected_components(const PointCloud& points, double radius);

}  // namespace al3d
