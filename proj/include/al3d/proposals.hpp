#pragma once

#include "al3d/clustering.hpp"

namespace al3d {

/// Visible-extent box around one cluster.
struct Proposal {
  Box7 box;
  std::vector<int> point_indices;  // into the clustered cloud
  Eigen::Vector3d mean_flow = Eigen::Vector3d::Zero();
  double bg_ratio = 0.0;
};

/// Heading convention: moving objects head along their motion; static objects
/// keep the raw (mod-pi) orientation flipped, when needed, to make an acute
/// angle with the ego heading. An exact right angle keeps the unflipped raw
/// heading.
double assign_heading(const Eigen::Vector3d& mean_flow, double raw_heading,
                      double ego_heading, double eps_sf);

struct ProposalParams {
  double r_bg = 0.99;             // discard when bg_ratio exceeds this
  double eps_sf = 1.0;            // moving/static decision for headings, m/s
  int min_cluster_points = 5;     // smaller clusters are skipped
  double max_bev_diagonal = 20.0; // larger clusters are skipped, meters
  double min_box_extent = 0.05;
};

/// One tightest box per cluster. Clusters that are mostly background
/// (bg_ratio > r_bg), too small, or oversized produce nothing; noise points
/// belong to no proposal. All inputs are aligned with `points`.
std::vector<Proposal> propose_boxes(const ClusterLabeling& labeling, const PointCloud& points,
                                    const Mask& bg_mask, const FlowField& flow,
                                    const ProposalParams& params, double ego_heading);

}  // namespace al3d
