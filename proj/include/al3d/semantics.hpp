#pragma once

#include "al3d/geometry.hpp"

#include <string>
#include <vector>

namespace al3d {

/// Per-point feature rows (N x D). Points never seen by a camera carry an
/// all-zero row; zero rows take no part in masking or voting.
using EmbeddingSet = Eigen::MatrixXf;

/// A named category with one embedding row per prompt.
struct TextQuery {
  std::string category;
  std::vector<std::string> prompts;
  Eigen::MatrixXf embeddings;  // P x D
};

constexpr int kUnassignedCategory = -1;

/// u.v / (|u||v|). Throws on a zero-norm input.
double cosine_similarity(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// 1 - cosine_similarity.
double cosine_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// Point i is background iff its best similarity against any prompt of any
/// background query reaches eps_bg. Zero-norm rows are never background.
Mask background_mask(const EmbeddingSet& emb, const std::vector<TextQuery>& bg_queries,
                     double eps_bg);

struct PointCategories {
  std::vector<int> category;  // kUnassignedCategory for zero-norm rows
  std::vector<double> score;  // best cosine similarity
};

/// Best category per point; a category scores with its best prompt. Ties go
/// to the lower category index.
PointCategories assign_point_categories(const EmbeddingSet& emb,
                                        const std::vector<TextQuery>& queries);

/// Majority vote over the points enclosed by the box. Ties break by higher
/// mean similarity, then lower category index. kUnassignedCategory when no
/// enclosed point carries a category.
int assign_box_category(const Box7& box, const PointCloud& points,
                        const PointCategories& point_categories);

struct PinholeCamera {
  int width = 0, height = 0;
  double fx = 0, fy = 0, cx = 0, cy = 0;
  Pose camera_from_sensor;  // sensor-frame point -> camera frame
};

/// Dense H x W x D feature image, rows stored pixel-row-major.
struct FeatureMap {
  int height = 0, width = 0;
  Eigen::MatrixXf data;  // (height*width) x D

  int dim() const { return static_cast<int>(data.cols()); }
  Eigen::MatrixXf::ConstRowXpr at(int v, int u) const { return data.row(v * width + u); }
};

struct UnprojectionResult {
  EmbeddingSet features;
  Mask visible;
};

/// Gathers per-point features from the camera images. Each point takes the
/// feature at its nearest projected pixel in the first camera (by list order)
/// that sees it; points behind every image plane get a zero row.
UnprojectionResult unproject_pixel_features(const PointCloud& sensor_points,
                                            const std::vector<PinholeCamera>& cameras,
                                            const std::vector<FeatureMap>& maps);

}  // namespace al3d
