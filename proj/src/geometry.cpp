#include "al3d/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace al3d {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double normalize_heading(double heading) {
  double h = std::fmod(heading, 2.0 * kPi);
  if (h <= -kPi) {
    h += 2.0 * kPi;
  } else if (h > kPi) {
    h -= 2.0 * kPi;
  }
  return h;
}

double angle_difference(double a, double b) {
  return std::abs(normalize_heading(normalize_heading(a) - normalize_heading(b)));
}

Pose Pose::from_yaw(double yaw, const Eigen::Vector3d& t) {
  Pose pose;
  pose.rotation = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  pose.translation = t;
  return pose;
}

Pose Pose::compose(const Pose& other) const {
  Pose out;
  out.rotation = rotation * other.rotation;
  out.translation = rotation * other.translation + translation;
  return out;
}

Pose Pose::inverse() const {
  Pose out;
  out.rotation = rotation.transpose();
  out.translation = -(out.rotation * translation);
  return out;
}

double Pose::yaw() const { return std::atan2(rotation(1, 0), rotation(0, 0)); }

bool Pose::is_valid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const Eigen::Matrix3d gram = rotation.transpose() * rotation;
  if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

bool Box7::valid() const {
  if (!(length > 0 && width > 0 && height > 0)) return false;
  if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(cz)) return false;
  if (!std::isfinite(heading) || heading <= -kPi || heading > kPi) return false;
  return true;
}

PointCloud transform_points(const PointCloud& points, const Pose& pose) {
  PointCloud out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) {
      throw std::invalid_argument("transform_points: non-finite point at index " +
                                  std::to_string(i));
    }
    out.push_back(pose.apply(points[i]));
  }
  return out;
}

Box7 transform_box(const Box7& box, const Pose& pose) {
  Box7 out = box;
  const Point3 c = pose.apply(box.center());
  out.cx = c.x();
  out.cy = c.y();
  out.cz = c.z();
  out.heading = normalize_heading(box.heading + pose.yaw());
  return out;
}

std::array<Point3, 8> box_corners(const Box7& box) {
  const double ch = std::cos(box.heading), sh = std::sin(box.heading);
  std::array<Point3, 8> corners;
  for (int i = 0; i < 8; ++i) {
    const double lx = (i & 1) ? box.length / 2 : -box.length / 2;
    const double ly = (i & 2) ? box.width / 2 : -box.width / 2;
    const double lz = (i & 4) ? box.height / 2 : -box.height / 2;
    corners[i] = Point3(box.cx + ch * lx - sh * ly, box.cy + sh * lx + ch * ly, box.cz + lz);
  }
  return corners;
}

std::array<Vec2, 4> box_bev_corners(const Box7& box) {
  const double ch = std::cos(box.heading), sh = std::sin(box.heading);
  const double hl = box.length / 2, hw = box.width / 2;
  // CCW in the box frame: (+,-), (+,+), (-,+), (-,-)
  const std::array<Vec2, 4> local = {Vec2(hl, -hw), Vec2(hl, hw), Vec2(-hl, hw), Vec2(-hl, -hw)};
  std::array<Vec2, 4> out;
  for (int i = 0; i < 4; ++i) {
    out[i] = Vec2(box.cx + ch * local[i].x() - sh * local[i].y(),
                  box.cy + sh * local[i].x() + ch * local[i].y());
  }
  return out;
}

double convex_polygon_area(const std::vector<Vec2>& poly) {
  if (poly.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  return std::abs(twice) / 2.0;
}

// Sutherland-Hodgman, clip polygon must be convex and CCW.
std::vector<Vec2> clip_convex_polygon(const std::vector<Vec2>& subject,
                                      const std::vector<Vec2>& clip) {
  std::vector<Vec2> output = subject;
  for (std::size_t e = 0; e < clip.size() && !output.empty(); ++e) {
    const Vec2 a = clip[e];
    const Vec2 b = clip[(e + 1) % clip.size()];
    const Vec2 edge = b - a;
    auto inside = [&](const Vec2& p) {
      return edge.x() * (p.y() - a.y()) - edge.y() * (p.x() - a.x()) >= 0.0;
    };
    auto intersect = [&](const Vec2& p, const Vec2& q) {
      const Vec2 d = q - p;
      const double denom = edge.x() * d.y() - edge.y() * d.x();
      const double t = (edge.x() * (a.y() - p.y()) - edge.y() * (a.x() - p.x())) / denom;
      return Vec2(p + t * d);
    };
    std::vector<Vec2> input;
    input.swap(output);
    for (std::size_t i = 0; i < input.size(); ++i) {
      const Vec2& cur = input[i];
      const Vec2& prev = input[(i + input.size() - 1) % input.size()];
      const bool cur_in = inside(cur), prev_in = inside(prev);
      if (cur_in) {
        if (!prev_in) output.push_back(intersect(prev, cur));
        output.push_back(cur);
      } else if (prev_in) {
        output.push_back(intersect(prev, cur));
      }
    }
  }
  return output;
}

namespace {

double bev_intersection_area(const Box7& a, const Box7& b) {
  const auto ca = box_bev_corners(a);
  const auto cb = box_bev_corners(b);
  const std::vector<Vec2> pa(ca.begin(), ca.end());
  const std::vector<Vec2> pb(cb.begin(), cb.end());
  return convex_polygon_area(clip_convex_polygon(pa, pb));
}

double z_overlap(const Box7& a, const Box7& b) {
  const double lo = std::max(a.cz - a.height / 2, b.cz - b.height / 2);
  const double hi = std::min(a.cz + a.height / 2, b.cz + b.height / 2);
  return std::max(0.0, hi - lo);
}

}  // namespace

double iou_3d(const Box7& a, const Box7& b) {
  const double inter = bev_intersection_area(a, b) * z_overlap(a, b);
  const double uni = a.volume() + b.volume() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

double iou_bev(const Box7& a, const Box7& b) {
  const double inter = bev_intersection_area(a, b);
  const double uni = a.bev_area() + b.bev_area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

double box_iou(const Box7& a, const Box7& b, IouKind kind) {
  return kind == IouKind::Volume3d ? iou_3d(a, b) : iou_bev(a, b);
}

bool point_in_box(const Box7& box, const Point3& p) {
  const double ch = std::cos(box.heading), sh = std::sin(box.heading);
  const double dx = p.x() - box.cx, dy = p.y() - box.cy, dz = p.z() - box.cz;
  const double lx = ch * dx + sh * dy;
  const double ly = -sh * dx + ch * dy;
  auto within = [](double v, double half) {
    return std::abs(v) <= half + 1e-9 * std::max(1.0, half);
  };
  return within(lx, box.length / 2) && within(ly, box.width / 2) && within(dz, box.height / 2);
}

Mask points_in_box(const Box7& box, const PointCloud& points) {
  Mask mask(points.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    mask[i] = point_in_box(box, points[i]) ? 1 : 0;
  }
  return mask;
}

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec2& a, const Vec2& b) { return a == b; }),
            pts.end());
  const std::size_t n = pts.size();
  if (n < 3) return pts;
  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Vec2> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = n - 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

MinAreaRect min_area_rect(const std::vector<Vec2>& points) {
  if (points.empty()) throw std::invalid_argument("min_area_rect: empty input");
  const std::vector<Vec2> hull = convex_hull(points);

  MinAreaRect best;
  if (hull.size() == 1) {
    best.center = hull[0];
    return best;
  }
  if (hull.size() == 2) {
    const Vec2 d = hull[1] - hull[0];
    best.center = (hull[0] + hull[1]) / 2;
    best.angle = normalize_heading(std::atan2(d.y(), d.x()));
    best.long_extent = d.norm();
    best.short_extent = 0.0;
    return best;
  }

  double best_area = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < hull.size(); ++e) {
    const Vec2 dir = (hull[(e + 1) % hull.size()] - hull[e]).normalized();
    const Vec2 ortho(-dir.y(), dir.x());
    double min_u = std::numeric_limits<double>::infinity(), max_u = -min_u;
    double min_v = min_u, max_v = -min_u;
    for (const Vec2& p : hull) {
      const double u = dir.dot(p), v = ortho.dot(p);
      min_u = std::min(min_u, u);
      max_u = std::max(max_u, u);
      min_v = std::min(min_v, v);
      max_v = std::max(max_v, v);
    }
    const double eu = max_u - min_u, ev = max_v - min_v;
    const double area = eu * ev;
    if (area < best_area - 1e-15) {
      best_area = area;
      const double cu = (min_u + max_u) / 2, cv = (min_v + max_v) / 2;
      best.center = cu * dir + cv * ortho;
      if (eu >= ev) {
        best.angle = std::atan2(dir.y(), dir.x());
        best.long_extent = eu;
        best.short_extent = ev;
      } else {
        best.angle = std::atan2(ortho.y(), ortho.x());
        best.long_extent = ev;
        best.short_extent = eu;
      }
    }
  }
  // Represent direction mod pi.
  best.angle = normalize_heading(best.angle);
  if (best.angle <= -kPi / 2) best.angle += kPi;
  if (best.angle > kPi / 2) best.angle -= kPi;
  return best;
}

Box7 fit_tightest_box(const PointCloud& points, std::optional<double> heading,
                      double min_extent) {
  if (points.empty()) throw std::invalid_argument("fit_tightest_box: empty input");

  double h = 0.0;
  Vec2 bev_center;
  double ext_l = 0.0, ext_w = 0.0;

  if (heading.has_value()) {
    h = normalize_heading(*heading);
    const double ch = std::cos(h), sh = std::sin(h);
    double min_u = std::numeric_limits<double>::infinity(), max_u = -min_u;
    double min_v = min_u, max_v = -min_u;
    for (const Point3& p : points) {
      const double u = ch * p.x() + sh * p.y();
      const double v = -sh * p.x() + ch * p.y();
      min_u = std::min(min_u, u);
      max_u = std::max(max_u, u);
      min_v = std::min(min_v, v);
      max_v = std::max(max_v, v);
    }
    ext_l = max_u - min_u;
    ext_w = max_v - min_v;
    const double cu = (min_u + max_u) / 2, cv = (min_v + max_v) / 2;
    bev_center = Vec2(ch * cu - sh * cv, sh * cu + ch * cv);
  } else {
    std::vector<Vec2> bev;
    bev.reserve(points.size());
    for (const Point3& p : points) bev.emplace_back(p.x(), p.y());
    const MinAreaRect rect = min_area_rect(bev);
    h = rect.angle;
    bev_center = rect.center;
    ext_l = rect.long_extent;
    ext_w = rect.short_extent;
  }

  double min_z = std::numeric_limits<double>::infinity(), max_z = -min_z;
  for (const Point3& p : points) {
    min_z = std::min(min_z, p.z());
    max_z = std::max(max_z, p.z());
  }

  Box7 box;
  box.cx = bev_center.x();
  box.cy = bev_center.y();
  box.cz = (min_z + max_z) / 2;
  box.length = std::max(ext_l, min_extent);
  box.width = std::max(ext_w, min_extent);
  box.height = std::max(max_z - min_z, min_extent);
  box.heading = h;
  return box;
}

std::vector<int> nms(const std::vector<Box7>& boxes, const std::vector<double>& scores,
                     double iou_threshold, IouKind kind) {
  if (boxes.size() != scores.size()) {
    throw std::invalid_argument("nms: boxes and scores differ in length");
  }
  std::vector<int> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;  // tie -> lower index first
  });

  std::vector<int> kept;
  std::vector<char> suppressed(boxes.size(), 0);
  for (int idx : order) {
    if (suppressed[idx]) continue;
    kept.push_back(idx);
    for (int other : order) {
      if (other == idx || suppressed[other]) continue;
      if (box_iou(boxes[idx], boxes[other], kind) >= iou_threshold) suppressed[other] = 1;
    }
  }
  return kept;
}

}  // namespace al3d
