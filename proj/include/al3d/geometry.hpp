#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace al3d {

using Point3 = Eigen::Vector3d;
using PointCloud = std::vector<Point3>;
using Vec2 = Eigen::Vector2d;

/// Per-point boolean mask, 0/1 valued.
using Mask = std::vector<std::uint8_t>;

/// Wraps an angle into (-pi, pi]; the boundary -pi maps to +pi.
double normalize_heading(double heading);

/// Absolute difference between two angles, in [0, pi].
double angle_difference(double a, double b);

/// Rigid transform: p -> rotation * p + translation.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }
  static Pose from_yaw(double yaw, const Eigen::Vector3d& t = Eigen::Vector3d::Zero());

  Point3 apply(const Point3& p) const { return rotation * p + translation; }
  /// this ∘ other: applies `other` first, then this.
  Pose compose(const Pose& other) const;
  Pose inverse() const;
  /// Rotation about +z extracted from the rotation matrix.
  double yaw() const;
  /// Orthonormal with determinant +1 within `tol`.
  bool is_valid(double tol = 1e-9) const;
};

/// Upright 7-parameter box: center, extents, heading about +z.
/// `length` is the extent along the heading direction.
struct Box7 {
  double cx = 0, cy = 0, cz = 0;
  double length = 0, width = 0, height = 0;
  double heading = 0;

  Point3 center() const { return {cx, cy, cz}; }
  double volume() const { return length * width * height; }
  double bev_area() const { return length * width; }
  double bev_diagonal() const { return std::sqrt(length * length + width * width); }
  double min_dim() const { return std::min({length, width, height}); }
  bool valid() const;
};

/// Points transformed by `pose`. Throws std::invalid_argument naming the
/// index of the first non-finite input point.
PointCloud transform_points(const PointCloud& points, const Pose& pose);

/// Box mapped through a rigid transform; heading follows the rotated axis
/// (the transform's yaw), dims unchanged.
Box7 transform_box(const Box7& box, const Pose& pose);

/// The 8 corners. Corner i offsets from center, in the box frame:
///   x = (i & 1) ? +length/2 : -length/2
///   y = (i & 2) ? +width/2  : -width/2
///   z = (i & 4) ? +height/2 : -height/2
std::array<Point3, 8> box_corners(const Box7& box);

/// BEV footprint corners in counter-clockwise order.
std::array<Vec2, 4> box_bev_corners(const Box7& box);

enum class IouKind { Volume3d, Bev };

/// Volume IoU. BEV intersection is exact convex polygon clipping; the
/// vertical part is the z-interval overlap.
double iou_3d(const Box7& a, const Box7& b);
/// Area IoU of the BEV footprints.
double iou_bev(const Box7& a, const Box7& b);
double box_iou(const Box7& a, const Box7& b, IouKind kind);

/// Boundary-inclusive membership test (tolerance ~1e-9 of the half extent).
bool point_in_box(const Box7& box, const Point3& p);
Mask points_in_box(const Box7& box, const PointCloud& points);

/// Tightest upright box around the points.
/// With `heading` set the axes are fixed and extents are min/max in the
/// heading frame. Without it, the minimal-area BEV rectangle over the convex
/// hull decides the heading (returned mod pi, long side first) and z extents
/// come from min/max z. Degenerate extents are clamped up to `min_extent`.
/// Throws on empty input.
Box7 fit_tightest_box(const PointCloud& points, std::optional<double> heading,
                      double min_extent = 0.05);

/// Greedy non-maximum suppression. Returns kept indices in descending score
/// order; ties in score keep the lower index. A box is suppressed when its
/// IoU with an already kept box reaches `iou_threshold`.
std::vector<int> nms(const std::vector<Box7>& boxes, const std::vector<double>& scores,
                     double iou_threshold, IouKind kind = IouKind::Volume3d);

// BEV helpers, exposed for tests.
double convex_polygon_area(const std::vector<Vec2>& poly);
std::vector<Vec2> clip_convex_polygon(const std::vector<Vec2>& subject,
                                      const std::vector<Vec2>& clip);
std::vector<Vec2> convex_hull(std::vector<Vec2> points);

struct MinAreaRect {
  Vec2 center;
  double angle = 0;     // direction of the `long_extent` axis, mod pi
  double long_extent = 0;
  double short_extent = 0;
  double area() const { return long_extent * short_extent; }
};
MinAreaRect min_area_rect(const std::vector<Vec2>& points);

}  // namespace al3d
