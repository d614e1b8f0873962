#include "al3d/kdtree.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace al3d {

SpatialIndex::SpatialIndex(PointCloud points) : points_(std::move(points)) {
  if (points_.empty()) return;
  std::vector<int> idx(points_.size());
  std::iota(idx.begin(), idx.end(), 0);
  nodes_.reserve(points_.size());
  root_ = build(idx, 0, static_cast<int>(idx.size()), 0);
}

int SpatialIndex::build(std::vector<int>& idx, int begin, int end, int depth) {
  if (begin >= end) return -1;
  const int axis = depth % 3;
  const int mid = begin + (end - begin) / 2;
  std::nth_element(idx.begin() + begin, idx.begin() + mid, idx.begin() + end,
                   [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
  Node node;
  node.point = idx[mid];
  node.axis = axis;
  const int self = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  nodes_[self].left = build(idx, begin, mid, depth + 1);
  nodes_[self].right = build(idx, mid + 1, end, depth + 1);
  return self;
}

void SpatialIndex::radius_search(int node, const Point3& query, double r2,
                                 std::vector<int>& out) const {
  if (node < 0) return;
  const Node& n = nodes_[node];
  const Point3& p = points_[n.point];
  if ((p - query).squaredNorm() <= r2) out.push_back(n.point);
  const double delta = query[n.axis] - p[n.axis];
  const int near = delta < 0 ? n.left : n.right;
  const int far = delta < 0 ? n.right : n.left;
  radius_search(near, query, r2, out);
  if (delta * delta <= r2) radius_search(far, query, r2, out);
}

std::vector<int> SpatialIndex::radius_neighbors(const Point3& query, double radius) const {
  if (radius < 0) throw std::invalid_argument("radius_neighbors: negative radius");
  std::vector<int> out;
  radius_search(root_, query, radius * radius, out);
  std::sort(out.begin(), out.end());
  return out;
}

void SpatialIndex::nearest_search(int node, const Point3& query, int& best,
                                  double& best_d2) const {
  if (node < 0) return;
  const Node& n = nodes_[node];
  const Point3& p = points_[n.point];
  const double d2 = (p - query).squaredNorm();
  if (d2 < best_d2 || (d2 == best_d2 && (best < 0 || n.point < best))) {
    best = n.point;
    best_d2 = d2;
  }
  const double delta = query[n.axis] - p[n.axis];
  const int near = delta < 0 ? n.left : n.right;
  const int far = delta < 0 ? n.right : n.left;
  nearest_search(near, query, best, best_d2);
  if (delta * delta <= best_d2) nearest_search(far, query, best, best_d2);
}

int SpatialIndex::nearest(const Point3& query, double max_dist, double* out_dist) const {
  int best = -1;
  double best_d2 = max_dist * max_dist;
  nearest_search(root_, query, best, best_d2);
  if (best >= 0 && out_dist) *out_dist = std::sqrt(best_d2);
  return best;
}

}  // namespace al3d
