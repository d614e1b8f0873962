#pragma once

#include "al3d/geometry.hpp"

namespace al3d {

/// Immutable k-d partitioning over a point set. Radius queries return exactly
/// the indices within the (inclusive) radius; safe to share across threads.
class SpatialIndex {
 public:
  SpatialIndex() = default;
  explicit SpatialIndex(PointCloud points);

  std::size_t size() const { return points_.size(); }
  const PointCloud& points() const { return points_; }

  /// Indices (ascending) of points with ||p - query|| <= radius.
  std::vector<int> radius_neighbors(const Point3& query, double radius) const;

  /// Index of the nearest point within `max_dist`, or -1. Distance written to
  /// `out_dist` when found.
  int nearest(const Point3& query, double max_dist,
              double* out_dist = nullptr) const;

 private:
  struct Node {
    int left = -1;
    int right = -1;
    int point = -1;
    int axis = 0;
  };

  int build(std::vector<int>& idx, int begin, int end, int depth);
  void radius_search(int node, const Point3& query, double r2,
                     std::vector<int>& out) const;
  void nearest_search(int node, const Point3& query, int& best,
                      double& best_d2) const;

  PointCloud points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace al3d
