#pragma once

#include "al3d/flow.hpp"
#include "al3d/geometry.hpp"
#include "al3d/semantics.hpp"

#include <optional>

namespace al3d {

constexpr int kNoiseLabel = -1;

struct StClusterParams {
  double eps_spatial = 1.0;  // neighborhood radius, meters
  int min_pts = 5;
  double alpha = 0.5;  // flow weight, seconds (velocity -> displacement)
  double beta = 0.0;   // unit-embedding weight, meters
};

struct ClusterLabeling {
  std::vector<int> labels;  // cluster id or kNoiseLabel
  int num_clusters = 0;
};

/// Density clustering in the composite space position (+) alpha*flow (+)
/// beta*unit(embedding). A pair is neighboring iff the composite distance is
/// at most eps_spatial; core points have at least min_pts neighbors
/// (themselves included). Cluster ids are contiguous in discovery order and
/// the outer scan runs in ascending point order, which pins border-point
/// assignment regardless of neighbor enumeration order.
ClusterLabeling st_cluster(const PointCloud& points, const FlowField& flow,
                           const std::optional<EmbeddingSet>& embeddings,
                           const StClusterParams& params);

}  // namespace al3d
