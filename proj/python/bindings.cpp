// Python bindings for the auto labeling core: geometry primitives, the
// pipeline stages, and the synthetic-scene generator.

#include "al3d/clustering.hpp"
#include "al3d/icp.hpp"
#include "al3d/metrics.hpp"
#include "al3d/pca.hpp"
#include "al3d/pipeline.hpp"
#include "al3d/synth.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace al3d;

namespace {

PointCloud to_cloud(const Eigen::MatrixXd& points) {
  if (points.cols() != 3) throw std::invalid_argument("expected an N x 3 array");
  PointCloud cloud(points.rows());
  for (int i = 0; i < points.rows(); ++i) cloud[i] = points.row(i).transpose();
  return cloud;
}

Eigen::MatrixXd from_cloud(const PointCloud& cloud) {
  Eigen::MatrixXd out(cloud.size(), 3);
  for (std::size_t i = 0; i < cloud.size(); ++i) out.row(i) = cloud[i].transpose();
  return out;
}

Eigen::MatrixXd box_to_row(const Box7& b) {
  Eigen::MatrixXd row(1, 7);
  row << b.cx, b.cy, b.cz, b.length, b.width, b.height, b.heading;
  return row;
}

Box7 box_from_seq(const Eigen::VectorXd& v) {
  if (v.size() != 7) throw std::invalid_argument("expected 7 box parameters");
  return Box7{v[0], v[1], v[2], v[3], v[4], v[5], normalize_heading(v[6])};
}

std::vector<Box7> boxes_from_matrix(const Eigen::MatrixXd& m) {
  if (m.cols() != 7) throw std::invalid_argument("expected an N x 7 array");
  std::vector<Box7> boxes(m.rows());
  for (int i = 0; i < m.rows(); ++i) boxes[i] = box_from_seq(m.row(i).transpose());
  return boxes;
}

std::vector<TextQuery> queries_from_pairs(
    const std::vector<std::pair<std::string, Eigen::MatrixXf>>& pairs) {
  std::vector<TextQuery> queries;
  for (const auto& [name, rows] : pairs) {
    TextQuery q;
    q.category = name;
    q.embeddings = rows;
    for (int p = 0; p < rows.rows(); ++p) q.prompts.push_back(name);
    queries.push_back(std::move(q));
  }
  return queries;
}

PipelineConfig config_from(const std::optional<std::string>& path) {
  return path ? PipelineConfig::load(*path) : PipelineConfig::defaults();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Unsupervised multi-modal auto labeling for LiDAR sequences";

  py::class_<Box7>(m, "Box7")
      .def(py::init([](double cx, double cy, double cz, double length, double width,
                       double height, double heading) {
             return Box7{cx, cy, cz, length, width, height, normalize_heading(heading)};
           }),
           py::arg("cx"), py::arg("cy"), py::arg("cz"), py::arg("length"), py::arg("width"),
           py::arg("height"), py::arg("heading"))
      .def_readwrite("cx", &Box7::cx)
      .def_readwrite("cy", &Box7::cy)
      .def_readwrite("cz", &Box7::cz)
      .def_readwrite("length", &Box7::length)
      .def_readwrite("width", &Box7::width)
      .def_readwrite("height", &Box7::height)
      .def_readwrite("heading", &Box7::heading)
      .def("volume", &Box7::volume)
      .def("__repr__", [](const Box7& b) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "Box7(cx=%.3f, cy=%.3f, cz=%.3f, length=%.3f, width=%.3f, "
                      "height=%.3f, heading=%.3f)",
                      b.cx, b.cy, b.cz, b.length, b.width, b.height, b.heading);
        return std::string(buf);
      });

  py::class_<LabelRecord>(m, "LabelRecord")
      .def_readonly("frame", &LabelRecord::frame)
      .def_readonly("track_id", &LabelRecord::track_id)
      .def_readonly("box", &LabelRecord::box)
      .def_readonly("score", &LabelRecord::score)
      .def_readonly("category", &LabelRecord::category);

  py::class_<PcaModel>(m, "PcaModel")
      .def_property_readonly("mean", [](const PcaModel& p) { return p.mean; })
      .def_property_readonly("components", [](const PcaModel& p) { return p.components; })
      .def_property_readonly("explained_variances",
                             [](const PcaModel& p) { return p.explained_variances; })
      .def("transform", &PcaModel::transform)
      .def("inverse", &PcaModel::inverse);

  // geometry
  m.def("normalize_heading", &normalize_heading);
  m.def("iou_3d", &iou_3d);
  m.def("iou_bev", &iou_bev);
  m.def(
      "box_corners",
      [](const Box7& box) {
        const auto corners = box_corners(box);
        return from_cloud(PointCloud(corners.begin(), corners.end()));
      },
      py::arg("box"));
  m.def(
      "points_in_box",
      [](const Box7& box, const Eigen::MatrixXd& points) {
        return points_in_box(box, to_cloud(points));
      },
      py::arg("box"), py::arg("points"));
  m.def(
      "fit_tightest_box",
      [](const Eigen::MatrixXd& points, std::optional<double> heading, double min_extent) {
        return fit_tightest_box(to_cloud(points), heading, min_extent);
      },
      py::arg("points"), py::arg("heading") = std::nullopt, py::arg("min_extent") = 0.05);
  m.def(
      "nms",
      [](const Eigen::MatrixXd& boxes, const std::vector<double>& scores, double iou_threshold,
         const std::string& kind) {
        return nms(boxes_from_matrix(boxes), scores, iou_threshold,
                   kind == "bev" ? IouKind::Bev : IouKind::Volume3d);
      },
      py::arg("boxes"), py::arg("scores"), py::arg("iou_threshold"), py::arg("kind") = "3d");
  m.def(
      "transform_points",
      [](const Eigen::MatrixXd& points, const Eigen::Matrix3d& rotation,
         const Eigen::Vector3d& translation) {
        Pose pose;
        pose.rotation = rotation;
        pose.translation = translation;
        return from_cloud(transform_points(to_cloud(points), pose));
      },
      py::arg("points"), py::arg("rotation"), py::arg("translation"));

  // semantics
  m.def("cosine_similarity", &cosine_similarity);
  m.def("cosine_distance", &cosine_distance);
  m.def(
      "background_mask",
      [](const Eigen::MatrixXf& features,
         const std::vector<std::pair<std::string, Eigen::MatrixXf>>& queries, double eps_bg) {
        return background_mask(features, queries_from_pairs(queries), eps_bg);
      },
      py::arg("features"), py::arg("queries"), py::arg("eps_bg"));
  m.def(
      "assign_point_categories",
      [](const Eigen::MatrixXf& features,
         const std::vector<std::pair<std::string, Eigen::MatrixXf>>& queries) {
        const PointCategories out =
            assign_point_categories(features, queries_from_pairs(queries));
        return py::make_tuple(out.category, out.score);
      },
      py::arg("features"), py::arg("queries"));
  m.def("pca_fit", &pca_fit, py::arg("data"), py::arg("k"));

  // flow
  m.def(
      "estimate_scene_flow",
      [](const Eigen::MatrixXd& frame, const Eigen::MatrixXd& next, double dt) {
        const FlowField flow = estimate_scene_flow(to_cloud(frame), to_cloud(next), dt);
        Eigen::MatrixXd out(flow.vectors.size(), 3);
        for (std::size_t i = 0; i < flow.vectors.size(); ++i) {
          out.row(i) = flow.vectors[i].transpose();
        }
        return out;
      },
      py::arg("frame"), py::arg("next"), py::arg("dt"));
  m.def(
      "fit_ground",
      [](const Eigen::MatrixXd& points) {
        const GroundModel model = fit_ground(to_cloud(points));
        return py::make_tuple(Eigen::Vector3d(model.normal), model.offset);
      },
      py::arg("points"));

  // clustering
  m.def(
      "st_cluster",
      [](const Eigen::MatrixXd& points, const Eigen::MatrixXd& flow, double eps, int min_pts,
         double alpha, double beta, const std::optional<Eigen::MatrixXf>& embeddings) {
        if (flow.rows() != points.rows() || flow.cols() != 3) {
          throw std::invalid_argument("flow must match points as an N x 3 array");
        }
        FlowField field;
        field.dt = 0.1;
        for (int i = 0; i < flow.rows(); ++i) field.vectors.emplace_back(flow.row(i));
        field.confident.assign(field.vectors.size(), 1);
        StClusterParams params;
        params.eps_spatial = eps;
        params.min_pts = min_pts;
        params.alpha = alpha;
        params.beta = beta;
        const ClusterLabeling out = st_cluster(to_cloud(points), field, embeddings, params);
        return py::make_tuple(out.labels, out.num_clusters);
      },
      py::arg("points"), py::arg("flow"), py::arg("eps") = 1.0, py::arg("min_pts") = 5,
      py::arg("alpha") = 0.5, py::arg("beta") = 0.0, py::arg("embeddings") = std::nullopt);

  // metrics
  m.def(
      "average_precision",
      [](const Eigen::MatrixXd& det_boxes, const std::vector<double>& det_scores,
         const std::vector<int>& det_frames, const Eigen::MatrixXd& gt_boxes,
         const std::vector<int>& gt_frames, double iou_threshold) {
        const std::vector<Box7> dets = boxes_from_matrix(det_boxes);
        const std::vector<Box7> gts = boxes_from_matrix(gt_boxes);
        if (dets.size() != det_scores.size() || dets.size() != det_frames.size() ||
            gts.size() != gt_frames.size()) {
          throw std::invalid_argument("detection/ground-truth arrays disagree in length");
        }
        std::vector<Detection> d(dets.size());
        for (std::size_t i = 0; i < dets.size(); ++i) {
          d[i] = {dets[i], det_scores[i], kAnyCategory, det_frames[i]};
        }
        std::vector<GroundTruthBox> g(gts.size());
        for (std::size_t i = 0; i < gts.size(); ++i) {
          g[i] = {gts[i], kAnyCategory, gt_frames[i], static_cast<int>(i)};
        }
        return average_precision(d, g, iou_threshold);
      },
      py::arg("det_boxes"), py::arg("det_scores"), py::arg("det_frames"), py::arg("gt_boxes"),
      py::arg("gt_frames"), py::arg("iou_threshold"));
  m.def("mean_ap", &mean_ap);

  // synth + pipeline entry points over the on-disk format
  m.def("scene_preset_names", &scene_preset_names);
  m.def(
      "generate_preset",
      [](const std::string& name, std::uint64_t seed, const std::filesystem::path& out_dir) {
        save_dataset(generate(scene_preset(name), seed), out_dir);
      },
      py::arg("name"), py::arg("seed"), py::arg("out_dir"));
  m.def(
      "autolabel",
      [](const std::filesystem::path& dataset, const std::filesystem::path& out_labels,
         std::optional<double> eps_sf, int workers, bool bg_filter,
         const std::optional<std::string>& config_path) {
        PipelineConfig config = config_from(config_path);
        if (eps_sf) config.eps_sf = *eps_sf;
        const DatasetManifest manifest = DatasetManifest::load(dataset);
        AutolabelOptions options;
        options.workers = workers;
        options.bg_filter = bg_filter;
        const AutolabelResult result = run_autolabel(manifest, dataset, config, options);
        save_labels(out_labels, labels_to_records(result.labels, {}));
        return result.labels.size();
      },
      py::arg("dataset"), py::arg("out_labels"), py::arg("eps_sf") = std::nullopt,
      py::arg("workers") = 1, py::arg("bg_filter") = true,
      py::arg("config_path") = std::nullopt);
  m.def(
      "query",
      [](const std::filesystem::path& dataset, const std::filesystem::path& labels,
         const std::filesystem::path& queries, const std::filesystem::path& out,
         const std::optional<std::string>& config_path) {
        const PipelineConfig config = config_from(config_path);
        const DatasetManifest manifest = DatasetManifest::load(dataset);
        const auto categorized = run_query(load_labels(labels), manifest, dataset,
                                           load_queries(queries), config);
        save_labels(out, categorized);
      },
      py::arg("dataset"), py::arg("labels"), py::arg("queries"), py::arg("out"),
      py::arg("config_path") = std::nullopt);
  m.def(
      "evaluate",
      [](const std::filesystem::path& dataset, const std::filesystem::path& labels,
         const std::filesystem::path& gt, const std::optional<std::string>& config_path) {
        const PipelineConfig config = config_from(config_path);
        const DatasetManifest manifest = DatasetManifest::load(dataset);
        const EvalReport report =
            run_eval(load_labels(labels), load_labels(gt), manifest, config);
        return report.values;
      },
      py::arg("dataset"), py::arg("labels"), py::arg("gt"),
      py::arg("config_path") = std::nullopt);
  m.def("load_labels", [](const std::filesystem::path& file) { return load_labels(file); },
        py::arg("file"));
}
