#include "al3d/proposals.hpp"

#include <cmath>
#include <stdexcept>

namespace al3d {

double assign_heading(const Eigen::Vector3d& mean_flow, double raw_heading,
                      double ego_heading, double eps_sf) {
  if (!mean_flow.allFinite() || !std::isfinite(raw_heading) || !std::isfinite(ego_heading)) {
    throw std::invalid_argument("assign_heading: non-finite input");
  }
  if (mean_flow.norm() >= eps_sf) {
    return normalize_heading(std::atan2(mean_flow.y(), mean_flow.x()));
  }
  const double raw = normalize_heading(raw_heading);
  constexpr double kHalfPi = 1.57079632679489661923;
  if (angle_difference(raw, ego_heading) <= kHalfPi) return raw;
  return normalize_heading(raw + 2.0 * kHalfPi);
}

std::vector<Proposal> propose_boxes(const ClusterLabeling& labeling, const PointCloud& points,
                                    const Mask& bg_mask, const FlowField& flow,
                                    const ProposalParams& params, double ego_heading) {
  if (labeling.labels.size() != points.size() || bg_mask.size() != points.size() ||
      flow.vectors.size() != points.size()) {
    throw std::invalid_argument("propose_boxes: input sizes disagree");
  }
  if (!(params.r_bg > 0 && params.r_bg <= 1)) {
    throw std::invalid_argument("propose_boxes: r_bg must be in (0, 1]");
  }

  std::vector<std::vector<int>> members(labeling.num_clusters);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int label = labeling.labels[i];
    if (label != kNoiseLabel) members[label].push_back(static_cast<int>(i));
  }

  std::vector<Proposal> proposals;
  for (const std::vector<int>& cluster : members) {
    if (static_cast<int>(cluster.size()) < params.min_cluster_points) continue;

    int bg_count = 0;
    Eigen::Vector3d mean_flow = Eigen::Vector3d::Zero();
    PointCloud pts;
    pts.reserve(cluster.size());
    for (int i : cluster) {
      bg_count += bg_mask[i] ? 1 : 0;
      mean_flow += flow.vectors[i];
      pts.push_back(points[i]);
    }
    mean_flow /= static_cast<double>(cluster.size());
    const double bg_ratio = static_cast<double>(bg_count) / cluster.size();
    if (bg_ratio > params.r_bg) continue;

    // Orientation evidence: motion when moving, minimal-area rectangle
    // otherwise.
    const Box7 free_fit = fit_tightest_box(pts, std::nullopt, params.min_box_extent);
    if (free_fit.bev_diagonal() > params.max_bev_diagonal) continue;
    const double heading =
        assign_heading(mean_flow, free_fit.heading, ego_heading, params.eps_sf);

    Proposal proposal;
    proposal.box = fit_tightest_box(pts, heading, params.min_box_extent);
    proposal.point_indices = cluster;
    proposal.mean_flow = mean_flow;
    proposal.bg_ratio = bg_ratio;
    proposals.push_back(std::move(proposal));
  }
  return proposals;
}

}  // namespace al3d
