#include "al3d/semantics.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace al3d {

double cosine_similarity(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("cosine_similarity: dimensionality mismatch");
  }
  const double nu = u.norm(), nv = v.norm();
  if (nu == 0.0 || nv == 0.0) {
    throw std::invalid_argument("cosine_similarity: zero-norm vector");
  }
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

double cosine_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  return 1.0 - cosine_similarity(u, v);
}

namespace {

// Prompt rows of all queries, L2-normalized, in double precision. Also fills
// the owning category index per row.
Eigen::MatrixXd normalized_prompt_rows(const std::vector<TextQuery>& queries, int dim,
                                       std::vector<int>* owner) {
  int rows = 0;
  for (const TextQuery& q : queries) rows += static_cast<int>(q.embeddings.rows());
  Eigen::MatrixXd out(rows, dim);
  int r = 0;
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    const Eigen::MatrixXf& e = queries[qi].embeddings;
    if (e.cols() != dim) {
      throw std::invalid_argument("text query '" + queries[qi].category +
                                  "' dimensionality mismatch");
    }
    for (int p = 0; p < e.rows(); ++p, ++r) {
      const Eigen::VectorXd row = e.row(p).cast<double>();
      const double n = row.norm();
      if (n == 0.0) {
        throw std::invalid_argument("text query '" + queries[qi].category +
                                    "' has a zero-norm prompt embedding");
      }
      out.row(r) = row / n;
      if (owner) owner->push_back(static_cast<int>(qi));
    }
  }
  return out;
}

}  // namespace

Mask background_mask(const EmbeddingSet& emb, const std::vector<TextQuery>& bg_queries,
                     double eps_bg) {
  if (bg_queries.empty()) {
    throw std::invalid_argument("background_mask: no background queries");
  }
  if (!std::isfinite(eps_bg)) {
    throw std::invalid_argument("background_mask: eps_bg not finite");
  }
  const Eigen::MatrixXd prompts =
      normalized_prompt_rows(bg_queries, static_cast<int>(emb.cols()), nullptr);

  Mask mask(emb.rows(), 0);
  for (int i = 0; i < emb.rows(); ++i) {
    const Eigen::VectorXd f = emb.row(i).cast<double>();
    const double n = f.norm();
    if (n == 0.0) continue;  // no semantic evidence
    const double best = (prompts * (f / n)).maxCoeff();
    mask[i] = best >= eps_bg ? 1 : 0;
  }
  return mask;
}

PointCategories assign_point_categories(const EmbeddingSet& emb,
                                        const std::vector<TextQuery>& queries) {
  if (queries.empty()) {
    throw std::invalid_argument("assign_point_categories: empty query list");
  }
  std::vector<int> owner;
  const Eigen::MatrixXd prompts =
      normalized_prompt_rows(queries, static_cast<int>(emb.cols()), &owner);

  PointCategories out;
  out.category.assign(emb.rows(), kUnassignedCategory);
  out.score.assign(emb.rows(), 0.0);
  for (int i = 0; i < emb.rows(); ++i) {
    const Eigen::VectorXd f = emb.row(i).cast<double>();
    const double n = f.norm();
    if (n == 0.0) continue;
    const Eigen::VectorXd sims = prompts * (f / n);
    // Per category, the best prompt wins; per point the best category wins.
    // Rows are ordered by ascending category index, so the strict comparison
    // leaves ties with the lower category.
    int best_cat = kUnassignedCategory;
    double best_sim = -2.0;
    for (int r = 0; r < sims.size(); ++r) {
      if (sims[r] > best_sim) {
        best_sim = sims[r];
        best_cat = owner[r];
      }
    }
    out.category[i] = best_cat;
    out.score[i] = std::clamp(best_sim, -1.0, 1.0);
  }
  return out;
}

int assign_box_category(const Box7& box, const PointCloud& points,
                        const PointCategories& point_categories) {
  if (points.size() != point_categories.category.size()) {
    throw std::invalid_argument("assign_box_category: mask/point size mismatch");
  }
  std::map<int, std::pair<int, double>> votes;  // category -> (count, sim sum)
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int cat = point_categories.category[i];
    if (cat == kUnassignedCategory) continue;
    if (!point_in_box(box, points[i])) continue;
    auto& v = votes[cat];
    v.first += 1;
    v.second += point_categories.score[i];
  }
  int best = kUnassignedCategory;
  int best_count = 0;
  double best_mean = -2.0;
  for (const auto& [cat, v] : votes) {
    const double mean = v.second / v.first;
    if (v.first > best_count ||
        (v.first == best_count && (mean > best_mean ||
                                   (mean == best_mean && cat < best)))) {
      best = cat;
      best_count = v.first;
      best_mean = mean;
    }
  }
  return best;
}

UnprojectionResult unproject_pixel_features(const PointCloud& sensor_points,
                                            const std::vector<PinholeCamera>& cameras,
                                            const std::vector<FeatureMap>& maps) {
  if (cameras.size() != maps.size()) {
    throw std::invalid_argument("unproject_pixel_features: camera/map count mismatch");
  }
  int dim = 0;
  for (std::size_t k = 0; k < cameras.size(); ++k) {
    const PinholeCamera& cam = cameras[k];
    if (!std::isfinite(cam.fx) || !std::isfinite(cam.fy) || !std::isfinite(cam.cx) ||
        !std::isfinite(cam.cy) || !cam.camera_from_sensor.is_valid(1e-6)) {
      throw std::invalid_argument("unproject_pixel_features: non-finite calibration for camera " +
                                  std::to_string(k));
    }
    if (maps[k].height != cam.height || maps[k].width != cam.width) {
      throw std::invalid_argument("unproject_pixel_features: feature map size mismatch");
    }
    if (dim == 0) dim = maps[k].dim();
    if (maps[k].dim() != dim) {
      throw std::invalid_argument("unproject_pixel_features: feature dim mismatch across cameras");
    }
  }

  UnprojectionResult out;
  out.features = EmbeddingSet::Zero(static_cast<int>(sensor_points.size()), dim);
  out.visible.assign(sensor_points.size(), 0);

  for (std::size_t i = 0; i < sensor_points.size(); ++i) {
    for (std::size_t k = 0; k < cameras.size(); ++k) {  // list order = priority
      const PinholeCamera& cam = cameras[k];
      const Point3 pc = cam.camera_from_sensor.apply(sensor_points[i]);
      if (pc.z() <= 0.0) continue;  // behind the image plane
      const double u = cam.fx * pc.x() / pc.z() + cam.cx;
      const double v = cam.fy * pc.y() / pc.z() + cam.cy;
      const long ui = std::lround(u), vi = std::lround(v);
      if (ui < 0 || ui >= cam.width || vi < 0 || vi >= cam.height) continue;
      out.features.row(static_cast<int>(i)) =
          maps[k].at(static_cast<int>(vi), static_cast<int>(ui));
      out.visible[i] = 1;
      break;
    }
  }
  return out;
}

}  // namespace al3d
