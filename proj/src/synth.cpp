#include "al3d/synth.hpp"

#include "al3d/rng.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace al3d {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Solid {
  Box7 box;
  int object_index = -1;  // -1 = background box
  std::string category;
  double density = 0.0;
};

// Face s of a box, in box-frame coordinates: axis (0=x,1=y,2=z) and sign.
struct Face {
  int axis;
  double sign;
};
constexpr Face kFaces[6] = {{0, +1}, {0, -1}, {1, +1}, {1, -1}, {2, +1}, {2, -1}};

Eigen::Vector3d box_axis_world(const Box7& box, int axis) {
  const double ch = std::cos(box.heading), sh = std::sin(box.heading);
  if (axis == 0) return {ch, sh, 0};
  if (axis == 1) return {-sh, ch, 0};
  return {0, 0, 1};
}

Eigen::Vector3d to_world(const Box7& box, const Eigen::Vector3d& local) {
  const double ch = std::cos(box.heading), sh = std::sin(box.heading);
  return {box.cx + ch * local.x() - sh * local.y(),
          box.cy + sh * local.x() + ch * local.y(), box.cz + local.z()};
}

Eigen::Vector3d half_extents(const Box7& box) {
  return {box.length / 2, box.width / 2, box.height / 2};
}

// Segment-box overlap via the slab test in the box frame.
bool segment_hits_box(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Box7& box) {
  const double ch = std::cos(box.heading), sh = std::sin(box.heading);
  auto to_local = [&](const Eigen::Vector3d& p) {
    const double dx = p.x() - box.cx, dy = p.y() - box.cy;
    return Eigen::Vector3d(ch * dx + sh * dy, -sh * dx + ch * dy, p.z() - box.cz);
  };
  const Eigen::Vector3d la = to_local(a), lb = to_local(b);
  const Eigen::Vector3d d = lb - la;
  const Eigen::Vector3d h = half_extents(box);
  double tmin = 0.0, tmax = 1.0;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) < 1e-12) {
      if (std::abs(la[k]) > h[k]) return false;
      continue;
    }
    double t0 = (-h[k] - la[k]) / d[k];
    double t1 = (h[k] - la[k]) / d[k];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return false;
  }
  return true;
}

Eigen::VectorXf rotated_prototype(const Eigen::VectorXd& proto, double noise_rad, Rng& rng) {
  const int dim = static_cast<int>(proto.size());
  // Fixed draw count regardless of the outcome keeps the stream stable.
  Eigen::VectorXd g(dim);
  for (int i = 0; i < dim; ++i) g[i] = rng.normal();
  const double frac = rng.uniform();
  if (noise_rad <= 0) return proto.cast<float>();
  g -= g.dot(proto) * proto;
  const double norm = g.norm();
  if (norm < 1e-12) return proto.cast<float>();
  const double theta = noise_rad * frac;
  const Eigen::VectorXd out = std::cos(theta) * proto + std::sin(theta) * (g / norm);
  return out.cast<float>();
}

}  // namespace

double length_axis_coverage(const PointCloud& points, const Box7& amodal_box) {
  if (points.empty()) return 0.0;
  const double ch = std::cos(amodal_box.heading), sh = std::sin(amodal_box.heading);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const Point3& p : points) {
    const double u = ch * (p.x() - amodal_box.cx) + sh * (p.y() - amodal_box.cy);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  const double half = amodal_box.length / 2;
  const double covered = std::min(hi, half) - std::max(lo, -half);
  return std::max(0.0, covered) / amodal_box.length;
}

SynthDataset generate(const SceneSpec& spec, std::uint64_t seed) {
  if (spec.duration < 1) throw std::invalid_argument("generate: duration must be >= 1");
  if (!(spec.dt > 0)) throw std::invalid_argument("generate: dt must be positive");
  if (static_cast<int>(spec.ego.size()) != spec.duration) {
    throw std::invalid_argument("generate: ego trajectory length must equal duration");
  }
  if (spec.objects.empty() && spec.background_boxes.empty() && spec.ground.density <= 0) {
    throw std::invalid_argument("generate: empty scene spec");
  }
  for (const ObjectSpec& obj : spec.objects) {
    if (static_cast<int>(obj.trajectory.size()) != spec.duration) {
      throw std::invalid_argument("generate: object trajectory length must equal duration");
    }
    if (!(obj.length > 0 && obj.width > 0 && obj.height > 0)) {
      throw std::invalid_argument("generate: object dims must be positive");
    }
  }

  // Category -> prototype axis, objects first then background categories.
  std::map<std::string, int> axis_of;
  std::vector<std::string> ordered;
  auto claim = [&](const std::string& name) {
    if (axis_of.count(name)) return;
    axis_of[name] = static_cast<int>(ordered.size());
    ordered.push_back(name);
  };
  for (const ObjectSpec& obj : spec.objects) claim(obj.category);
  for (const std::string& name : spec.background_categories) claim(name);
  claim(spec.ground.category);
  for (const BackgroundBoxSpec& bg : spec.background_boxes) claim(bg.category);
  if (static_cast<int>(ordered.size()) > spec.embedding.dim) {
    throw std::invalid_argument("generate: more categories than embedding dims");
  }
  auto prototype = [&](const std::string& name) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(spec.embedding.dim);
    p[axis_of.at(name)] = 1.0;
    return p;
  };
  const double noise_rad = spec.embedding.noise_deg * kPi / 180.0;

  SynthDataset dataset;
  dataset.dt = spec.dt;
  dataset.dim = spec.embedding.dim;
  Rng rng(seed);

  for (int t = 0; t < spec.duration; ++t) {
    const Eigen::Vector3d sensor = spec.ego[t].translation;

    std::vector<Solid> solids;
    for (std::size_t o = 0; o < spec.objects.size(); ++o) {
      const ObjectSpec& obj = spec.objects[o];
      if (obj.hidden_frames.count(t)) continue;
      const ObjectPoseSample& pose = obj.trajectory[t];
      Box7 box;
      box.cx = pose.center.x();
      box.cy = pose.center.y();
      box.cz = pose.center.z();
      box.length = obj.length;
      box.width = obj.width;
      box.height = obj.height;
      box.heading = normalize_heading(pose.heading);
      solids.push_back({box, static_cast<int>(o), obj.category, obj.surface_density});
    }
    for (const BackgroundBoxSpec& bg : spec.background_boxes) {
      solids.push_back({bg.box, -1, bg.category, bg.surface_density});
    }

    SynthFrame frame;
    frame.ego = spec.ego[t];
    std::vector<Eigen::VectorXf> emb_rows;

    std::set<int> objects_seen;
    for (std::size_t s = 0; s < solids.size(); ++s) {
      const Solid& solid = solids[s];
      const Eigen::Vector3d h = half_extents(solid.box);
      for (const Face& face : kFaces) {
        const Eigen::Vector3d normal = face.sign * box_axis_world(solid.box, face.axis);
        Eigen::Vector3d fc_local = Eigen::Vector3d::Zero();
        fc_local[face.axis] = face.sign * h[face.axis];
        const Eigen::Vector3d face_center = to_world(solid.box, fc_local);
        if (normal.dot(sensor - face_center) <= 1e-9) continue;
        bool blocked = false;
        for (std::size_t other = 0; other < solids.size(); ++other) {
          if (other == s) continue;
          if (segment_hits_box(sensor, face_center, solids[other].box)) {
            blocked = true;
            break;
          }
        }
        if (blocked) continue;

        const int u_axis = (face.axis + 1) % 3;
        const int v_axis = (face.axis + 2) % 3;
        const double area = 4.0 * h[u_axis] * h[v_axis];
        const long count = std::lround(solid.density * area);
        for (long i = 0; i < count; ++i) {
          Eigen::Vector3d local = fc_local;
          local[u_axis] = h[u_axis] * (2.0 * rng.uniform() - 1.0);
          local[v_axis] = h[v_axis] * (2.0 * rng.uniform() - 1.0);
          const double drop = rng.uniform();
          Eigen::Vector3d noise(rng.normal(), rng.normal(), rng.normal());

          const Eigen::Vector3d clean_world = to_world(solid.box, local);
          if ((clean_world - sensor).norm() > spec.sensor.range) continue;
          if (drop < spec.sensor.dropout) continue;
          Eigen::Vector3d noisy = local + spec.sensor.noise_sigma * noise;
          for (int k = 0; k < 3; ++k) noisy[k] = std::clamp(noisy[k], -h[k], h[k]);
          const Eigen::Vector3d world = to_world(solid.box, noisy);

          frame.points.push_back(world);
          frame.owner.push_back(solid.object_index);
          emb_rows.push_back(
              rotated_prototype(prototype(solid.category), noise_rad, rng));

          if (solid.object_index >= 0) {
            objects_seen.insert(solid.object_index);
            // Rigid-body velocity of the material point.
            const ObjectSpec& obj = spec.objects[solid.object_index];
            const int t0 = t + 1 < spec.duration ? t : t - 1;
            Eigen::Vector3d v = Eigen::Vector3d::Zero();
            if (t0 >= 0 && t0 + 1 < spec.duration) {
              auto at = [&](int tt) {
                const ObjectPoseSample& p = obj.trajectory[tt];
                Box7 b = solid.box;
                b.cx = p.center.x();
                b.cy = p.center.y();
                b.cz = p.center.z();
                b.heading = normalize_heading(p.heading);
                return to_world(b, noisy);
              };
              v = (at(t0 + 1) - at(t0)) / spec.dt;
            }
            frame.flow.push_back(v);
          } else {
            frame.flow.push_back(Eigen::Vector3d::Zero());
          }
        }
      }
    }

    // Ground disc around the sensor.
    if (spec.ground.density > 0 && spec.ground.radius > 0) {
      const double area = kPi * spec.ground.radius * spec.ground.radius;
      const long count = std::lround(spec.ground.density * area);
      for (long i = 0; i < count; ++i) {
        const double r = spec.ground.radius * std::sqrt(rng.uniform());
        const double phi = 2.0 * kPi * rng.uniform();
        const double drop = rng.uniform();
        const double zn = rng.normal();
        if (drop < spec.sensor.dropout) continue;
        frame.points.emplace_back(sensor.x() + r * std::cos(phi),
                                  sensor.y() + r * std::sin(phi),
                                  spec.sensor.noise_sigma * zn);
        frame.owner.push_back(-1);
        frame.flow.push_back(Eigen::Vector3d::Zero());
        emb_rows.push_back(
            rotated_prototype(prototype(spec.ground.category), noise_rad, rng));
      }
    }

    frame.embeddings.resize(static_cast<int>(emb_rows.size()), spec.embedding.dim);
    for (std::size_t i = 0; i < emb_rows.size(); ++i) {
      frame.embeddings.row(static_cast<int>(i)) = emb_rows[i].transpose();
    }

    for (int o : objects_seen) {
      const ObjectSpec& obj = spec.objects[o];
      const ObjectPoseSample& pose = obj.trajectory[t];
      GtBox gt;
      gt.box = {pose.center.x(), pose.center.y(), pose.center.z(),
                obj.length,      obj.width,       obj.height,
                normalize_heading(pose.heading)};
      gt.track_id = o;
      gt.frame = t;
      gt.category = obj.category;
      dataset.gt_boxes.push_back(gt);
    }
    dataset.frames.push_back(std::move(frame));
  }

  // Queries: exact prototypes, one prompt per category.
  std::set<std::string> object_categories;
  for (const ObjectSpec& obj : spec.objects) object_categories.insert(obj.category);
  for (const std::string& name : ordered) {
    TextQuery q;
    q.category = name;
    q.prompts = {name};
    q.embeddings = prototype(name).cast<float>().transpose();
    if (object_categories.count(name)) {
      dataset.queries.push_back(q);
    } else {
      dataset.bg_queries.push_back(q);
    }
  }
  return dataset;
}

namespace {

const std::vector<std::string> kDefaultBackgroundCategories = {
    "vegetation", "road", "street", "sky",  "tree",     "building",
    "house",      "skyscraper", "wall", "fence", "sidewalk"};

std::vector<Pose> straight_ego(int duration, const Eigen::Vector3d& start,
                               const Eigen::Vector3d& step) {
  std::vector<Pose> poses;
  for (int t = 0; t < duration; ++t) {
    poses.push_back(Pose::from_yaw(0.0, start + t * step));
  }
  return poses;
}

std::vector<ObjectPoseSample> straight_trajectory(int duration, const Eigen::Vector3d& start,
                                                  const Eigen::Vector3d& velocity, double dt,
                                                  double heading) {
  std::vector<ObjectPoseSample> traj;
  for (int t = 0; t < duration; ++t) {
    traj.push_back({start + (t * dt) * velocity, heading});
  }
  return traj;
}

ObjectSpec make_object(const std::string& category, double l, double w, double h,
                       std::vector<ObjectPoseSample> traj, double density) {
  ObjectSpec obj;
  obj.category = category;
  obj.length = l;
  obj.width = w;
  obj.height = h;
  obj.trajectory = std::move(traj);
  obj.surface_density = density;
  return obj;
}

SceneSpec urban_mini() {
  SceneSpec spec;
  spec.duration = 20;
  spec.dt = 0.1;
  spec.embedding.dim = 16;
  spec.embedding.noise_deg = 5.0;
  spec.sensor.range = 60.0;
  spec.sensor.noise_sigma = 0.01;
  spec.ground.radius = 25.0;
  spec.ground.density = 2.0;
  spec.background_categories = kDefaultBackgroundCategories;
  spec.ego = straight_ego(spec.duration, {0, 0, 0.6}, {0.5, 0, 0});

  // Two movers: an oncoming vehicle and a crossing pedestrian. Paths keep
  // clear of the parked rows by more than the clustering radius.
  spec.objects.push_back(make_object(
      "vehicle", 4.6, 1.9, 1.5,
      straight_trajectory(spec.duration, {30, 3.5, 1.1}, {-8, 0, 0}, spec.dt, kPi), 50));
  spec.objects.push_back(make_object(
      "vru", 0.7, 0.7, 1.7,
      straight_trajectory(spec.duration, {13, -6, 1.2}, {0, 1.6, 0}, spec.dt, kPi / 2), 80));
  // Two parked vehicles.
  spec.objects.push_back(make_object(
      "vehicle", 4.6, 1.9, 1.5,
      straight_trajectory(spec.duration, {18, -4, 1.1}, {0, 0, 0}, spec.dt, 0.0), 50));
  spec.objects.push_back(make_object(
      "vehicle", 4.4, 1.8, 1.4,
      straight_trajectory(spec.duration, {8, 4.5, 1.05}, {0, 0, 0}, spec.dt, 0.0), 50));

  BackgroundBoxSpec building;
  building.box = {20, 12, 4, 16, 6, 8, 0};
  building.category = "building";
  building.surface_density = 8.0;
  spec.background_boxes.push_back(building);

  BackgroundBoxSpec hedge;
  hedge.box = {5, -9, 1.3, 10, 1.5, 1.8, 0};
  hedge.category = "vegetation";
  hedge.surface_density = 15.0;
  spec.background_boxes.push_back(hedge);
  return spec;
}

SceneSpec drive_by() {
  SceneSpec spec;
  spec.duration = 20;
  spec.dt = 0.1;
  spec.embedding.dim = 16;
  spec.embedding.noise_deg = 0.0;
  spec.sensor.range = 3.5;  // tight range keeps single views partial
  spec.sensor.noise_sigma = 0.01;
  spec.ground.radius = 3.5;
  spec.ground.density = 4.0;
  spec.background_categories = kDefaultBackgroundCategories;
  spec.ego = straight_ego(spec.duration, {-9, 0, 0.8}, {1.0, 0, 0});

  // Static bus passed front to rear; near side face sits 2.5 m off the path.
  spec.objects.push_back(make_object(
      "vehicle", 9.0, 2.4, 2.8,
      straight_trajectory(spec.duration, {0, 3.7, 1.6}, {0, 0, 0}, spec.dt, 0.0), 60));
  return spec;
}

SceneSpec follow() {
  SceneSpec spec;
  spec.duration = 20;
  spec.dt = 0.1;
  spec.embedding.dim = 16;
  spec.embedding.noise_deg = 0.0;
  spec.sensor.range = 12.0;
  spec.sensor.noise_sigma = 0.01;
  spec.ground.radius = 12.0;
  spec.ground.density = 2.0;
  spec.background_categories = kDefaultBackgroundCategories;
  spec.ego = straight_ego(spec.duration, {0, 0, 0.6}, {0.8, 0, 0});

  // Lead vehicle at matched speed: only the rear face is ever visible.
  spec.objects.push_back(make_object(
      "vehicle", 4.6, 1.9, 1.5,
      straight_trajectory(spec.duration, {12, 0, 1.1}, {8, 0, 0}, spec.dt, 0.0), 60));
  return spec;
}

SceneSpec crowd() {
  SceneSpec spec;
  spec.duration = 12;
  spec.dt = 0.1;
  spec.embedding.dim = 16;
  spec.embedding.noise_deg = 0.0;  // noiseless: category assignment is exact
  spec.sensor.range = 25.0;
  spec.sensor.noise_sigma = 0.005;
  spec.ground.radius = 15.0;
  spec.ground.density = 2.0;
  spec.background_categories = kDefaultBackgroundCategories;
  spec.ego = straight_ego(spec.duration, {0, 0, 0.6}, {0.2, 0, 0});

  spec.objects.push_back(make_object(
      "vehicle", 4.6, 1.9, 1.5,
      straight_trajectory(spec.duration, {8, 1.5, 1.1}, {0, 0, 0}, spec.dt, 0.0), 50));
  spec.objects.push_back(make_object(
      "vru", 0.7, 0.7, 1.7,
      straight_trajectory(spec.duration, {6.5, -1.5, 1.2}, {0, 0, 0}, spec.dt, 0.0), 80));
  spec.objects.push_back(make_object(
      "vru", 0.7, 0.7, 1.7,
      straight_trajectory(spec.duration, {11, -1.2, 1.2}, {0, 0, 0}, spec.dt, kPi / 2), 80));
  return spec;
}

SceneSpec dropout() {
  SceneSpec spec;
  spec.duration = 20;
  spec.dt = 0.1;
  spec.embedding.dim = 16;
  spec.embedding.noise_deg = 0.0;
  spec.sensor.range = 30.0;
  spec.sensor.noise_sigma = 0.01;
  spec.ground.radius = 15.0;
  spec.ground.density = 2.0;
  spec.background_categories = kDefaultBackgroundCategories;
  spec.ego = straight_ego(spec.duration, {0, 0, 0.6}, {0, 0, 0});

  ObjectSpec mover = make_object(
      "vehicle", 4.6, 1.9, 1.5,
      straight_trajectory(spec.duration, {10, -5, 1.1}, {0, 3, 0}, spec.dt, kPi / 2), 50);
  mover.hidden_frames = {9, 10};  // invisible mid-sequence, within the coast budget
  spec.objects.push_back(mover);
  return spec;
}

}  // namespace

SceneSpec scene_preset(const std::string& name) {
  if (name == "urban-mini") return urban_mini();
  if (name == "drive-by") return drive_by();
  if (name == "follow") return follow();
  if (name == "crowd") return crowd();
  if (name == "dropout") return dropout();
  throw std::invalid_argument("scene_preset: unknown preset '" + name + "'");
}

std::vector<std::string> scene_preset_names() {
  return {"urban-mini", "drive-by", "follow", "crowd", "dropout"};
}

}  // namespace al3d
