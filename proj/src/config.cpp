#include "al3d/config.hpp"

#include "al3d/dataset.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace al3d {

namespace {

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(value);
  while (std::getline(ss, item, ',')) {
    const std::size_t begin = item.find_first_not_of(" \t");
    const std::size_t end = item.find_last_not_of(" \t");
    if (begin != std::string::npos) out.push_back(item.substr(begin, end - begin + 1));
  }
  return out;
}

std::string join_list(const std::vector<std::string>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out += values[i];
    if (i + 1 < values.size()) out += ", ";
  }
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("config: " + what);
  };
  require(eps_sf >= 0, "eps_sf must be >= 0");
  require(std::isfinite(eps_bg), "eps_bg must be finite");
  require(r_bg > 0 && r_bg <= 1, "r_bg must be in (0, 1]");
  require(cluster_eps > 0, "cluster_eps must be positive");
  require(min_pts > 0, "min_pts must be positive");
  require(alpha >= 0 && beta >= 0, "feature weights must be nonnegative");
  require(ground_clearance >= 0, "ground_clearance must be nonnegative");
  require(association_gate > 0, "association_gate must be positive");
  require(max_misses >= 0, "max_misses must be nonnegative");
  require(min_track_length >= 1, "min_track_length must be >= 1");
  require(nms_iou > 0 && nms_iou <= 1, "nms_iou must be in (0, 1]");
  require(nms_iou_kind == "bev" || nms_iou_kind == "3d", "nms_iou_kind must be bev or 3d");
  require(min_dim >= 0, "min_dim must be nonnegative");
  require(max_bev_diagonal > 0, "max_bev_diagonal must be positive");
  require(region_length > 0 && region_width > 0, "region dims must be positive");
  require(!eval_iou_thresholds.empty(), "eval_iou_thresholds must not be empty");
  for (double thr : eval_iou_thresholds) {
    require(thr > 0 && thr < 1, "eval IoU thresholds must be in (0, 1)");
  }
  require(mot_match_iou > 0 && mot_match_iou < 1, "mot_match_iou must be in (0, 1)");
  require(pca_dim >= 1, "pca_dim must be >= 1");
  require(!background_categories.empty(), "background category list must not be empty");
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open config: " + file.string());

  PipelineConfig config;
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const std::size_t begin = line.find_first_not_of(" \t");
    if (begin == std::string::npos) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("malformed config line: " + line);
    }
    std::string key = line.substr(begin, eq - begin);
    key.erase(key.find_last_not_of(" \t") + 1);
    std::string value = line.substr(eq + 1);
    const std::size_t vb = value.find_first_not_of(" \t");
    value = vb == std::string::npos ? "" : value.substr(vb, value.find_last_not_of(" \t") - vb + 1);

    auto as_double = [&] { return std::stod(value); };
    auto as_int = [&] { return std::stoi(value); };
    if (key == "eps_sf") config.eps_sf = as_double();
    else if (key == "eps_bg") config.eps_bg = as_double();
    else if (key == "r_bg") config.r_bg = as_double();
    else if (key == "cluster_eps") config.cluster_eps = as_double();
    else if (key == "min_pts") config.min_pts = as_int();
    else if (key == "alpha") config.alpha = as_double();
    else if (key == "beta") config.beta = as_double();
    else if (key == "ground_clearance") config.ground_clearance = as_double();
    else if (key == "association_gate") config.association_gate = as_double();
    else if (key == "max_misses") config.max_misses = as_int();
    else if (key == "min_track_length") config.min_track_length = as_int();
    else if (key == "nms_iou") config.nms_iou = as_double();
    else if (key == "nms_iou_kind") config.nms_iou_kind = value;
    else if (key == "min_dim") config.min_dim = as_double();
    else if (key == "max_bev_diagonal") config.max_bev_diagonal = as_double();
    else if (key == "region_length") config.region_length = as_double();
    else if (key == "region_width") config.region_width = as_double();
    else if (key == "mot_match_iou") config.mot_match_iou = as_double();
    else if (key == "pca_dim") config.pca_dim = as_int();
    else if (key == "pca_enabled") config.pca_enabled = (value == "true" || value == "1");
    else if (key == "eval_iou_thresholds") {
      config.eval_iou_thresholds.clear();
      for (const std::string& item : split_list(value)) {
        config.eval_iou_thresholds.push_back(std::stod(item));
      }
    } else if (key == "background_categories") {
      config.background_categories = split_list(value);
    } else if (key == "vehicle_prompts") {
      config.vehicle_prompts = split_list(value);
    } else if (key == "vru_prompts") {
      config.vru_prompts = split_list(value);
    } else {
      throw std::runtime_error("unknown config key: " + key);
    }
  }
  config.validate();
  return config;
}

void PipelineConfig::save(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write config: " + file.string());
  out << "# auto labeling pipeline configuration\n";
  out << "# 'published' marks values taken from the reported operating point;\n";
  out << "# 'decision' marks values this implementation chose.\n\n";
  out << "eps_sf = " << format_double(eps_sf)
      << "              # published; minimum flow magnitude, m/s; 0 = all motion states\n";
  out << "eps_bg = " << format_double(eps_bg)
      << "             # published; background cosine-similarity threshold\n";
  out << "r_bg = " << format_double(r_bg)
      << "               # published; max background ratio inside a kept box\n";
  out << "cluster_eps = " << format_double(cluster_eps)
      << "         # published; clustering neighborhood radius, meters\n";
  out << "min_pts = " << min_pts << "             # decision; density-clustering core threshold\n";
  out << "alpha = " << format_double(alpha)
      << "             # decision; flow weight in the composite metric, seconds\n";
  out << "beta = " << format_double(beta)
      << "                # decision; embedding weight in the composite metric, meters\n";
  out << "ground_clearance = " << format_double(ground_clearance)
      << "    # decision; kept points sit above the plane by more than this\n";
  out << "association_gate = " << format_double(association_gate)
      << "      # decision; BEV association gate, meters\n";
  out << "max_misses = " << max_misses << "          # decision; coasted frames before a track ends\n";
  out << "min_track_length = " << min_track_length
      << "    # decision; shorter tracks are dropped as spurious\n";
  out << "nms_iou = " << format_double(nms_iou) << "           # decision; label cleanup overlap\n";
  out << "nms_iou_kind = " << nms_iou_kind
      << "      # decision; cleanup overlap measured in bev or 3d\n";
  out << "min_dim = " << format_double(min_dim)
      << "           # decision; tiny-box filter, meters\n";
  out << "max_bev_diagonal = " << format_double(max_bev_diagonal)
      << "   # decision; oversized-box filter, meters\n";
  out << "region_length = " << format_double(region_length)
      << "     # published; evaluation rectangle around the ego, meters\n";
  out << "region_width = " << format_double(region_width) << "      # published\n";
  out << "eval_iou_thresholds = ";
  for (std::size_t i = 0; i < eval_iou_thresholds.size(); ++i) {
    out << format_double(eval_iou_thresholds[i]);
    if (i + 1 < eval_iou_thresholds.size()) out << ", ";
  }
  out << "  # published detection IoUs\n";
  out << "mot_match_iou = " << format_double(mot_match_iou)
      << "     # decision; tracking match threshold\n";
  out << "pca_dim = " << pca_dim << "            # published; compressed feature dimensionality\n";
  out << "pca_enabled = " << (pca_enabled ? "true" : "false")
      << "   # decision; compression off by default at this scale\n";
  out << "background_categories = " << join_list(background_categories) << "  # published\n";
  out << "vehicle_prompts = " << join_list(vehicle_prompts) << "  # published\n";
  out << "vru_prompts = " << join_list(vru_prompts) << "  # published\n";
  if (!out) throw std::runtime_error("config write failed: " + file.string());
}

}  // namespace al3d
