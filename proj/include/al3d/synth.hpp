#pragma once

#include "al3d/geometry.hpp"
#include "al3d/semantics.hpp"

#include <set>
#include <string>
#include <vector>

namespace al3d {

/// One object pose per frame.
struct ObjectPoseSample {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double heading = 0.0;
};

struct ObjectSpec {
  std::string category;
  double length = 1, width = 1, height = 1;
  std::vector<ObjectPoseSample> trajectory;  // one entry per frame
  double surface_density = 50.0;             // points per square meter
  std::set<int> hidden_frames;               // frames with no returns at all
};

struct BackgroundBoxSpec {
  Box7 box;
  std::string category;  // must be one of the background categories
  double surface_density = 20.0;
};

struct GroundSpec {
  double radius = 25.0;  // sampled disc around the sensor, meters
  double density = 2.0;  // points per square meter
  std::string category = "road";
};

struct EmbeddingModelSpec {
  int dim = 16;
  double noise_deg = 0.0;  // per-point rotation away from the prototype
};

struct SensorModelSpec {
  double range = 75.0;
  double dropout = 0.0;      // per-point drop probability
  double noise_sigma = 0.0;  // meters
};

struct SceneSpec {
  int duration = 0;
  double dt = 0.1;
  std::vector<Pose> ego;  // one pose per frame; translation is the sensor origin
  std::vector<ObjectSpec> objects;
  std::vector<BackgroundBoxSpec> background_boxes;
  GroundSpec ground;
  EmbeddingModelSpec embedding;
  SensorModelSpec sensor;
  std::vector<std::string> background_categories;  // queried as background
};

struct SynthFrame {
  PointCloud points;                         // world frame
  EmbeddingSet embeddings;                   // N x D
  std::vector<Eigen::Vector3d> flow;         // analytic ground truth, m/s
  std::vector<int> owner;                    // object index, or -1 for background
  Pose ego;
};

struct GtBox {
  Box7 box;
  int track_id = 0;
  int frame = 0;
  std::string category;
};

struct SynthDataset {
  std::vector<SynthFrame> frames;
  std::vector<GtBox> gt_boxes;  // amodal, only for frames where the object returned points
  std::vector<TextQuery> queries;     // object categories, prototype embeddings
  std::vector<TextQuery> bg_queries;  // background categories
  double dt = 0.1;
  int dim = 16;
};

/// Deterministic scene rendering: equal (spec, seed) gives byte-equal output.
/// Box faces are sampled when their outward normal points at the sensor, the
/// segment to the face center is not blocked by another box, and the sample
/// survives range and dropout; sample noise is clamped into the owning box.
/// Prototypes are orthonormal axes assigned per category, rotated per point
/// by up to the configured noise angle.
SynthDataset generate(const SceneSpec& spec, std::uint64_t seed);

/// Canned scenes: "urban-mini", "drive-by", "follow", "crowd", "dropout".
/// Throws on an unknown name.
SceneSpec scene_preset(const std::string& name);
std::vector<std::string> scene_preset_names();

/// Fraction of the object's length axis covered by the BEV extent of the
/// given points, expressed in the object frame. The occlusion presets are
/// validated with this.
double length_axis_coverage(const PointCloud& points, const Box7& amodal_box);

}  // namespace al3d
