#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace al3d {

/// Every stage threshold in one place. Defaults follow the published
/// operating point where one exists; the remainder are documented choices in
/// the shipped config file.
struct PipelineConfig {
  // Foreground selection
  double eps_sf = 1.0;   // minimum flow magnitude, m/s (0 = all motion states)
  double eps_bg = 0.02;  // background cosine-similarity threshold
  double r_bg = 0.99;    // discard boxes whose background ratio exceeds this

  // Clustering
  double cluster_eps = 1.0;  // neighborhood radius, meters
  int min_pts = 5;
  double alpha = 0.5;  // flow weight in the composite metric, seconds
  double beta = 0.0;   // embedding weight in the composite metric, meters

  // Preprocessing
  double ground_clearance = 0.3;  // meters above the fitted plane

  // Tracking
  double association_gate = 3.0;  // BEV center distance, meters
  int max_misses = 2;
  int min_track_length = 2;  // shorter tracks are dropped as spurious

  // Label cleanup
  double nms_iou = 0.2;
  std::string nms_iou_kind = "bev";  // "bev" or "3d"
  double min_dim = 0.1;
  double max_bev_diagonal = 20.0;

  // Evaluation
  double region_length = 100.0;  // ego-centered rectangle, meters
  double region_width = 40.0;
  std::vector<double> eval_iou_thresholds = {0.4, 0.5};
  double mot_match_iou = 0.4;

  // Feature compression
  int pca_dim = 64;
  bool pca_enabled = false;

  // Query vocabularies
  std::vector<std::string> background_categories = {
      "vegetation", "road",       "street", "sky",   "tree",    "building",
      "house",      "skyscraper", "wall",   "fence", "sidewalk"};
  std::vector<std::string> vehicle_prompts = {
      "car",        "vehicle",      "parked vehicle", "sedan",
      "truck",      "bus",          "van",            "minivan",
      "school bus", "pickup truck", "ambulance",      "fire truck"};
  std::vector<std::string> vru_prompts = {"cyclist", "human", "person", "pedestrian",
                                          "bicycle"};

  static PipelineConfig defaults() { return {}; }
  static PipelineConfig load(const std::filesystem::path& file);
  void save(const std::filesystem::path& file) const;

  /// Throws when a value is outside its documented range.
  void validate() const;
};

}  // namespace al3d
