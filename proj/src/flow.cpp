#include "al3d/flow.hpp"

#include "al3d/kdtree.hpp"
#include "al3d/rng.hpp"

#include <Eigen/Eigenvalues>

#include <deque>
#include <stdexcept>

namespace al3d {

namespace {

// Least-squares plane through a point set (smallest covariance direction).
bool plane_from_points(const PointCloud& pts, Eigen::Vector3d* normal, double* offset) {
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const Point3& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const Point3& p : pts) {
    const Eigen::Vector3d d = p - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  // Rank-deficient (collinear) sets have two near-zero eigenvalues.
  if (solver.eigenvalues()[1] <= 1e-12 * std::max(1.0, solver.eigenvalues()[2])) {
    return false;
  }
  Eigen::Vector3d n = solver.eigenvectors().col(0);
  if (n.z() < 0) n = -n;
  if (n.norm() == 0.0) return false;
  n.normalize();
  *normal = n;
  *offset = n.dot(centroid);
  return true;
}

}  // namespace

GroundModel fit_ground(const PointCloud& points, const GroundFitParams& params) {
  if (points.size() < 50) {
    throw std::invalid_argument("fit_ground: needs at least 50 points");
  }
  double min_z = std::numeric_limits<double>::infinity();
  for (const Point3& p : points) min_z = std::min(min_z, p.z());

  std::vector<int> candidates;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].z() <= min_z + params.band_height) candidates.push_back(static_cast<int>(i));
  }
  if (candidates.size() < 3) {
    throw std::runtime_error(
        "fit_ground: degenerate geometry; consider a fixed height-threshold fallback");
  }

  Rng rng(params.seed);
  Eigen::Vector3d best_normal = Eigen::Vector3d::UnitZ();
  double best_offset = 0.0;
  int best_inliers = -1;
  for (int it = 0; it < params.iterations; ++it) {
    const int a = candidates[rng.uniform_index(candidates.size())];
    const int b = candidates[rng.uniform_index(candidates.size())];
    const int c = candidates[rng.uniform_index(candidates.size())];
    if (a == b || b == c || a == c) continue;
    const Eigen::Vector3d n =
        (points[b] - points[a]).cross(points[c] - points[a]);
    if (n.norm() < 1e-12) continue;
    Eigen::Vector3d normal = n.normalized();
    if (normal.z() < 0) normal = -normal;
    if (normal.z() < params.min_normal_z) continue;  // not a ground candidate
    const double offset = normal.dot(points[a]);
    int inliers = 0;
    for (int idx : candidates) {
      if (std::abs(normal.dot(points[idx]) - offset) <= params.inlier_distance) ++inliers;
    }
    if (inliers > best_inliers) {
      best_inliers = inliers;
      best_normal = normal;
      best_offset = offset;
    }
  }
  if (best_inliers < static_cast<int>(params.min_inlier_ratio * candidates.size())) {
    throw std::runtime_error(
        "fit_ground: no plane reached the inlier ratio; consider a fixed height-threshold "
        "fallback");
  }

  // Refine on the inlier set.
  PointCloud inlier_pts;
  for (int idx : candidates) {
    if (std::abs(best_normal.dot(points[idx]) - best_offset) <= params.inlier_distance) {
      inlier_pts.push_back(points[idx]);
    }
  }
  GroundModel model;
  model.clearance = params.clearance;
  Eigen::Vector3d refined_n;
  double refined_d = 0.0;
  if (inlier_pts.size() >= 3 && plane_from_points(inlier_pts, &refined_n, &refined_d)) {
    model.normal = refined_n;
    model.offset = refined_d;
  } else {
    model.normal = best_normal;
    model.offset = best_offset;
  }
  return model;
}

Mask remove_ground(const PointCloud& points, const GroundModel& model) {
  Mask keep(points.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    keep[i] = model.signed_distance(points[i]) > model.clearance ? 1 : 0;
  }
  return keep;
}

std::vector<int> connected_components(const PointCloud& points, double radius) {
  std::vector<int> labels(points.size(), -1);
  if (points.empty()) return labels;
  const SpatialIndex index(points);
  int next_label = 0;
  std::deque<int> queue;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (labels[i] >= 0) continue;
    labels[i] = next_label;
    queue.push_back(static_cast<int>(i));
    while (!queue.empty()) {
      const int cur = queue.front();
      queue.pop_front();
      for (int nb : index.radius_neighbors(points[cur], radius)) {
        if (labels[nb] < 0) {
          labels[nb] = next_label;
          queue.push_back(nb);
        }
      }
    }
    ++next_label;
  }
  return labels;
}

FlowField estimate_scene_flow(const PointCloud& frame, const PointCloud& next, double dt,
                              const SceneFlowParams& params) {
  if (frame.empty() || next.empty()) {
    throw std::invalid_argument("estimate_scene_flow: empty frame");
  }
  if (!(dt > 0)) throw std::invalid_argument("estimate_scene_flow: dt must be positive");

  FlowField flow;
  flow.dt = dt;
  flow.vectors.assign(frame.size(), Eigen::Vector3d::Zero());
  flow.confident.assign(frame.size(), 1);

  const std::vector<int> labels = connected_components(frame, params.cluster_radius);
  int num_clusters = 0;
  for (int l : labels) num_clusters = std::max(num_clusters, l + 1);

  std::vector<std::vector<int>> members(num_clusters);
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(static_cast<int>(i));

  const SpatialIndex next_index(next);

  for (const std::vector<int>& cluster : members) {
    if (static_cast<int>(cluster.size()) < params.min_cluster_points) {
      for (int i : cluster) flow.confident[i] = 0;
      continue;
    }
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (int i : cluster) centroid += frame[i];
    centroid /= static_cast<double>(cluster.size());
    double bound = 0.0;
    PointCloud source;
    source.reserve(cluster.size());
    for (int i : cluster) {
      source.push_back(frame[i]);
      bound = std::max(bound, (frame[i] - centroid).norm());
    }

    // Restrict the target to the neighborhood the object can reach.
    PointCloud target;
    for (int j : next_index.radius_neighbors(centroid, bound + params.search_margin)) {
      target.push_back(next[j]);
    }

    bool ok = false;
    Pose transform;
    if (target.size() >= static_cast<std::size_t>(params.icp.min_correspondences)) {
      const IcpResult result = icp_point_to_point(source, SpatialIndex(target), params.icp);
      if (result.converged && result.mean_residual <= params.residual_cap) {
        ok = true;
        transform = result.transform;
      }
    }
    if (!ok) {
      for (int i : cluster) flow.confident[i] = 0;
      continue;
    }
    for (int i : cluster) {
      flow.vectors[i] = (transform.apply(frame[i]) - frame[i]) / dt;
    }
  }
  return flow;
}

FlowField backward_flow_negated(const PointCloud& last, const PointCloud& prev, double dt,
                                const SceneFlowParams& params) {
  FlowField flow = estimate_scene_flow(last, prev, dt, params);
  for (Eigen::Vector3d& v : flow.vectors) v = -v;
  return flow;
}

Mask speed_mask(const FlowField& flow, double eps_sf) {
  if (eps_sf < 0) throw std::invalid_argument("speed_mask: eps_sf must be nonnegative");
  Mask mask(flow.vectors.size(), 0);
  for (std::size_t i = 0; i < flow.vectors.size(); ++i) {
    mask[i] = flow.vectors[i].norm() >= eps_sf ? 1 : 0;
  }
  return mask;
}

}  // namespace al3d
