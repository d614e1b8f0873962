#include "al3d/clustering.hpp"

#include "al3d/kdtree.hpp"

#include <deque>
#include <stdexcept>

namespace al3d {

ClusterLabeling st_cluster(const PointCloud& points, const FlowField& flow,
                           const std::optional<EmbeddingSet>& embeddings,
                           const StClusterParams& params) {
  if (!(params.eps_spatial > 0) || params.min_pts <= 0) {
    throw std::invalid_argument("st_cluster: eps_spatial and min_pts must be positive");
  }
  if (params.alpha < 0 || params.beta < 0) {
    throw std::invalid_argument("st_cluster: negative feature weights");
  }
  const std::size_t n = points.size();
  if (flow.vectors.size() != n) {
    throw std::invalid_argument("st_cluster: flow size mismatch");
  }
  if (embeddings && static_cast<std::size_t>(embeddings->rows()) != n) {
    throw std::invalid_argument("st_cluster: embedding size mismatch");
  }

  // Composite rows. The spatial part alone lower-bounds the composite
  // distance, so a spatial radius query yields a candidate superset.
  const bool use_emb = embeddings.has_value() && params.beta > 0;
  Eigen::MatrixXd unit_emb;
  if (use_emb) {
    unit_emb.setZero(static_cast<int>(n), embeddings->cols());
    for (int i = 0; i < static_cast<int>(n); ++i) {
      const Eigen::VectorXd row = embeddings->row(i).cast<double>();
      const double norm = row.norm();
      if (norm > 0) unit_emb.row(i) = row / norm;
    }
  }

  const SpatialIndex index(points);
  const double eps2 = params.eps_spatial * params.eps_spatial;
  auto composite_within = [&](int a, int b) {
    double d2 = (points[a] - points[b]).squaredNorm();
    if (params.alpha > 0) {
      d2 += (params.alpha * (flow.vectors[a] - flow.vectors[b])).squaredNorm();
    }
    if (use_emb) {
      d2 += params.beta * params.beta *
            (unit_emb.row(a) - unit_emb.row(b)).squaredNorm();
    }
    return d2 <= eps2;
  };
  auto region_query = [&](int i) {
    std::vector<int> out;
    for (int j : index.radius_neighbors(points[i], params.eps_spatial)) {
      if (composite_within(i, j)) out.push_back(j);
    }
    return out;
  };

  constexpr int kUndefined = -2;
  ClusterLabeling result;
  result.labels.assign(n, kUndefined);
  int cluster_id = 0;
  std::deque<int> seeds;
  for (std::size_t i = 0; i < n; ++i) {
    if (result.labels[i] != kUndefined) continue;
    const std::vector<int> neigh = region_query(static_cast<int>(i));
    if (static_cast<int>(neigh.size()) < params.min_pts) {
      result.labels[i] = kNoiseLabel;
      continue;
    }
    result.labels[i] = cluster_id;
    seeds.assign(neigh.begin(), neigh.end());
    while (!seeds.empty()) {
      const int q = seeds.front();
      seeds.pop_front();
      if (result.labels[q] == kNoiseLabel) result.labels[q] = cluster_id;  // border point
      if (result.labels[q] != kUndefined) continue;
      result.labels[q] = cluster_id;
      const std::vector<int> qn = region_query(q);
      if (static_cast<int>(qn.size()) >= params.min_pts) {
        seeds.insert(seeds.end(), qn.begin(), qn.end());
      }
    }
    ++cluster_id;
  }
  result.num_clusters = cluster_id;
  return result;
}

}  // namespace al3d
