#include "al3d/icp.hpp"

#include <Eigen/SVD>

#include <stdexcept>

namespace al3d {

Pose align_rigid(const PointCloud& source, const PointCloud& target) {
  if (source.size() != target.size() || source.empty()) {
    throw std::invalid_argument("align_rigid: paired clouds required");
  }
  Eigen::Vector3d cs = Eigen::Vector3d::Zero(), ct = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    cs += source[i];
    ct += target[i];
  }
  cs /= static_cast<double>(source.size());
  ct /= static_cast<double>(target.size());

  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    h += (source[i] - cs) * (target[i] - ct).transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0 ? -1.0 : 1.0;
  Pose pose;
  pose.rotation = svd.matrixV() * d * svd.matrixU().transpose();
  pose.translation = ct - pose.rotation * cs;
  return pose;
}

IcpResult icp_point_to_point(const PointCloud& source, const SpatialIndex& target,
                             const IcpParams& params, const Pose& init) {
  IcpResult result;
  result.transform = init;
  if (source.empty() || target.size() == 0) return result;

  for (int iter = 0; iter < params.max_iterations; ++iter) {
    PointCloud matched_src, matched_tgt;
    std::vector<double> dists;
    matched_src.reserve(source.size());
    matched_tgt.reserve(source.size());
    for (const Point3& s : source) {
      const Point3 moved = result.transform.apply(s);
      double dist = 0.0;
      const int j = target.nearest(moved, params.max_correspondence_dist, &dist);
      if (j < 0) continue;
      matched_src.push_back(moved);
      matched_tgt.push_back(target.points()[j]);
      dists.push_back(dist);
    }
    result.iterations = iter + 1;
    if (static_cast<int>(matched_src.size()) < params.min_correspondences) {
      result.correspondences = static_cast<int>(matched_src.size());
      result.converged = false;
      return result;
    }

    // Residual trim: outlier pairs (uncovered geometry) must not steer the
    // alignment.
    std::vector<double> sorted = dists;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double median = sorted[sorted.size() / 2];
    const double cutoff = std::max(params.trim_multiplier * median, params.trim_floor);
    PointCloud kept_src, kept_tgt;
    double residual_sum = 0.0;
    for (std::size_t i = 0; i < matched_src.size(); ++i) {
      if (dists[i] > cutoff) continue;
      kept_src.push_back(matched_src[i]);
      kept_tgt.push_back(matched_tgt[i]);
      residual_sum += dists[i];
    }
    if (static_cast<int>(kept_src.size()) < params.min_correspondences) {
      kept_src = matched_src;
      kept_tgt = matched_tgt;
      residual_sum = 0.0;
      for (double d : dists) residual_sum += d;
    }
    result.correspondences = static_cast<int>(kept_src.size());
    result.mean_residual = residual_sum / result.correspondences;

    const Pose delta = align_rigid(kept_src, kept_tgt);
    result.transform = delta.compose(result.transform);

    const double angle =
        std::acos(std::clamp((delta.rotation.trace() - 1.0) / 2.0, -1.0, 1.0));
    if (delta.translation.norm() + angle < params.convergence_delta) {
      // The last trimmed residual is within convergence_delta of final.
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace al3d
