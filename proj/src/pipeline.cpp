#include "al3d/pipeline.hpp"

#include "al3d/clustering.hpp"
#include "al3d/pca.hpp"
#include "al3d/proposals.hpp"

#include <algorithm>
#include <atomic>
#include <set>
#include <sstream>
#include <thread>

namespace al3d {

namespace fs = std::filesystem;

namespace {

// Runs fn(i) for i in [0, count) across the requested workers. Exceptions
// propagate; outputs must be slot-per-index so the result is schedule-free.
void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, count));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct PreparedFrame {
  Frame frame;
  std::vector<int> non_ground;        // indices into frame.points
  PointCloud non_ground_points;
  std::vector<Eigen::Vector3d> flow;  // aligned with non_ground_points
};

SceneFlowParams flow_params(const PipelineConfig& config) {
  SceneFlowParams params;
  params.cluster_radius = config.cluster_eps;
  params.min_cluster_points = config.min_pts;
  return params;
}

// Ground removal; sequences recorded without a recoverable plane keep all
// points.
void prepare_ground(PreparedFrame& pf, const PipelineConfig& config, int frame_index) {
  GroundFitParams params;
  params.clearance = config.ground_clearance;
  params.seed = 0x51ab5eedull + static_cast<std::uint64_t>(frame_index);
  Mask keep;
  if (pf.frame.points.size() >= 50) {
    try {
      const GroundModel model = fit_ground(pf.frame.points, params);
      keep = remove_ground(pf.frame.points, model);
    } catch (const std::exception&) {
      keep.assign(pf.frame.points.size(), 1);
    }
  } else {
    keep.assign(pf.frame.points.size(), 1);
  }
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) {
      pf.non_ground.push_back(static_cast<int>(i));
      pf.non_ground_points.push_back(pf.frame.points[i]);
    }
  }
}

// Flow over the non-ground subset: sliced from precomputed vectors when the
// dataset carries them, estimated against the neighbor frame otherwise.
void prepare_flow(std::vector<PreparedFrame>& frames, int t, const PipelineConfig& config,
                  double dt) {
  PreparedFrame& pf = frames[t];
  pf.flow.assign(pf.non_ground_points.size(), Eigen::Vector3d::Zero());
  if (pf.non_ground_points.empty()) return;

  if (pf.frame.flow) {
    for (std::size_t k = 0; k < pf.non_ground.size(); ++k) {
      pf.flow[k] = pf.frame.flow->vectors[pf.non_ground[k]];
    }
    return;
  }

  if (frames.size() == 1) {
    throw std::runtime_error(
        "flow estimation needs a neighbor frame; a single-frame sequence has none "
        "(supply precomputed flow files instead)");
  }
  const bool last = t + 1 == static_cast<int>(frames.size());
  const PointCloud& neighbor =
      last ? frames[t - 1].non_ground_points : frames[t + 1].non_ground_points;
  if (neighbor.empty()) return;  // nothing to register against: zero flow

  const FlowField field =
      last ? backward_flow_negated(pf.non_ground_points, neighbor, dt, flow_params(config))
           : estimate_scene_flow(pf.non_ground_points, neighbor, dt, flow_params(config));
  pf.flow = field.vectors;
}

}  // namespace

AutolabelResult run_autolabel(const DatasetManifest& manifest, const fs::path& dir,
                              const PipelineConfig& config, const AutolabelOptions& options) {
  config.validate();
  const int frame_count = manifest.frame_count;

  std::vector<TextQuery> bg_queries;
  if (options.bg_filter) {
    const fs::path bg_file = dir / "bg_queries.txt";
    if (fs::exists(bg_file)) bg_queries = load_queries(bg_file);
  }

  std::vector<PreparedFrame> frames(frame_count);
  parallel_for(frame_count, options.workers, [&](int t) {
    frames[t].frame = load_frame(manifest, dir, t);
    prepare_ground(frames[t], config, t);
  });

  if (!bg_queries.empty()) {
    for (int t = 0; t < frame_count; ++t) {
      if (!frames[t].frame.embeddings && !frames[t].frame.points.empty()) {
        throw std::runtime_error(
            "background filtering needs per-point embeddings, but frame " +
            std::to_string(t) +
            " has none; supply embeddings or disable background filtering "
            "(--no-bg-filter)");
      }
    }
  }

  parallel_for(frame_count, options.workers,
               [&](int t) { prepare_flow(frames, t, config, manifest.dt); });

  std::vector<std::vector<Proposal>> per_frame(frame_count);
  std::vector<PointCloud> clustered_clouds(frame_count);
  parallel_for(frame_count, options.workers, [&](int t) {
    PreparedFrame& pf = frames[t];
    FlowField subset_flow;
    subset_flow.dt = manifest.dt;
    subset_flow.vectors = pf.flow;
    subset_flow.confident.assign(pf.flow.size(), 1);

    const Mask sf_mask = speed_mask(subset_flow, config.eps_sf);

    Mask bg_subset(pf.non_ground.size(), 0);
    if (!bg_queries.empty() && pf.frame.embeddings) {
      const Mask bg_full = background_mask(*pf.frame.embeddings, bg_queries, config.eps_bg);
      for (std::size_t k = 0; k < pf.non_ground.size(); ++k) {
        bg_subset[k] = bg_full[pf.non_ground[k]];
      }
    }

    // Line-12 filter: keep the speed-selected points and their attributes.
    std::vector<int> selected;
    for (std::size_t k = 0; k < sf_mask.size(); ++k) {
      if (sf_mask[k]) selected.push_back(static_cast<int>(k));
    }
    PointCloud pts;
    FlowField flow;
    flow.dt = manifest.dt;
    Mask bg;
    std::optional<EmbeddingSet> emb;
    if (config.beta > 0 && pf.frame.embeddings) {
      emb.emplace(static_cast<int>(selected.size()), pf.frame.embeddings->cols());
    }
    for (std::size_t k = 0; k < selected.size(); ++k) {
      const int s = selected[k];
      pts.push_back(pf.non_ground_points[s]);
      flow.vectors.push_back(pf.flow[s]);
      bg.push_back(bg_subset[s]);
      if (emb) emb->row(static_cast<int>(k)) =
          pf.frame.embeddings->row(pf.non_ground[s]);
    }
    flow.confident.assign(flow.vectors.size(), 1);
    clustered_clouds[t] = pts;
    if (pts.empty()) return;

    StClusterParams cluster_params;
    cluster_params.eps_spatial = config.cluster_eps;
    cluster_params.min_pts = config.min_pts;
    cluster_params.alpha = config.alpha;
    cluster_params.beta = config.beta;
    const ClusterLabeling labeling = st_cluster(pts, flow, emb, cluster_params);

    ProposalParams proposal_params;
    proposal_params.r_bg = config.r_bg;
    proposal_params.eps_sf = config.eps_sf;
    proposal_params.min_cluster_points = config.min_pts;
    proposal_params.max_bev_diagonal = config.max_bev_diagonal;
    per_frame[t] = propose_boxes(labeling, pts, bg, flow, proposal_params,
                                 pf.frame.ego.yaw());
  });

  TrackingParams tracking_params;
  tracking_params.association_gate = config.association_gate;
  tracking_params.max_misses = config.max_misses;
  tracking_params.dt = manifest.dt;
  std::vector<Track> tracks = track_proposals(per_frame, tracking_params);
  std::erase_if(tracks,
                [&](const Track& t) { return t.length() < config.min_track_length; });

  std::vector<double> ego_headings(frame_count, 0.0);
  for (int t = 0; t < frame_count; ++t) ego_headings[t] = frames[t].frame.ego.yaw();

  AmodalParams amodal_params;
  amodal_params.eps_sf = config.eps_sf;

  RegistrationParams registration;
  registration.dt = manifest.dt;

  std::vector<std::vector<LabeledBox>> per_track(tracks.size());
  parallel_for(static_cast<int>(tracks.size()), options.workers, [&](int i) {
    const RegisteredShape shape = register_track(tracks[i], clustered_clouds, registration);
    per_track[i] = amodalize(tracks[i], shape, ego_headings, amodal_params);
  });

  std::vector<LabeledBox> labels;
  for (const std::vector<LabeledBox>& boxes : per_track) {
    labels.insert(labels.end(), boxes.begin(), boxes.end());
  }

  CleanupParams cleanup;
  cleanup.min_dim = config.min_dim;
  cleanup.max_bev_diagonal = config.max_bev_diagonal;
  cleanup.nms_iou = config.nms_iou;
  cleanup.nms_kind = config.nms_iou_kind == "3d" ? IouKind::Volume3d : IouKind::Bev;

  AutolabelResult result;
  result.labels = cleanup_labels(labels, cleanup);
  result.per_frame_proposals = std::move(per_frame);
  result.tracks = std::move(tracks);
  return result;
}

std::vector<LabelRecord> labels_to_records(const std::vector<LabeledBox>& labels,
                                           const std::vector<TextQuery>& queries) {
  std::vector<LabelRecord> records;
  for (const LabeledBox& label : labels) {
    LabelRecord record;
    record.frame = label.frame;
    record.track_id = label.track_id;
    record.box = label.box;
    record.score = label.score;
    record.category =
        label.category >= 0 && label.category < static_cast<int>(queries.size())
            ? queries[label.category].category
            : "-";
    records.push_back(std::move(record));
  }
  std::sort(records.begin(), records.end(), [](const LabelRecord& a, const LabelRecord& b) {
    if (a.frame != b.frame) return a.frame < b.frame;
    if (a.score != b.score) return a.score > b.score;
    return a.track_id < b.track_id;
  });
  return records;
}

void run_flow(DatasetManifest& manifest, const fs::path& dir, const PipelineConfig& config,
              int workers) {
  config.validate();
  const int frame_count = manifest.frame_count;
  if (frame_count < 2) {
    throw std::runtime_error("flow estimation needs at least two frames");
  }

  std::vector<PreparedFrame> frames(frame_count);
  parallel_for(frame_count, workers, [&](int t) {
    frames[t].frame = load_frame(manifest, dir, t);
    frames[t].frame.flow.reset();  // re-estimate even when files exist
    prepare_ground(frames[t], config, t);
  });
  parallel_for(frame_count, workers,
               [&](int t) { prepare_flow(frames, t, config, manifest.dt); });

  parallel_for(frame_count, workers, [&](int t) {
    PreparedFrame& pf = frames[t];
    FlowField full;
    full.dt = manifest.dt;
    full.vectors.assign(pf.frame.points.size(), Eigen::Vector3d::Zero());
    full.confident.assign(pf.frame.points.size(), 1);
    for (std::size_t k = 0; k < pf.non_ground.size(); ++k) {
      full.vectors[pf.non_ground[k]] = pf.flow[k];
    }
    pf.frame.flow = std::move(full);
    save_frame(manifest, dir, t, pf.frame);
  });
  manifest.save(dir);
}

std::vector<LabelRecord> run_query(const std::vector<LabelRecord>& labels,
                                   const DatasetManifest& manifest, const fs::path& dir,
                                   const std::vector<TextQuery>& queries,
                                   const PipelineConfig& config) {
  config.validate();
  if (queries.empty()) throw std::invalid_argument("run_query: no queries given");

  std::set<int> frames_needed;
  for (const LabelRecord& label : labels) frames_needed.insert(label.frame);

  // Optional shared compression of features and query embeddings.
  std::optional<PcaModel> pca;
  std::vector<TextQuery> effective = queries;
  if (config.pca_enabled) {
    if (config.pca_dim > manifest.embedding_dim) {
      throw std::invalid_argument("run_query: pca_dim exceeds the embedding dimensionality");
    }
    PcaAccumulator acc(manifest.embedding_dim);
    for (int t = 0; t < manifest.frame_count; ++t) {
      const Frame frame = load_frame(manifest, dir, t);
      if (!frame.embeddings) {
        throw std::runtime_error("run_query: frame " + std::to_string(t) +
                                 " has no embeddings");
      }
      acc.add(*frame.embeddings);
    }
    pca = acc.finalize(config.pca_dim);
    for (TextQuery& q : effective) q.embeddings = pca->transform_rows(q.embeddings);
  }

  std::vector<LabelRecord> out = labels;
  for (int frame_index : frames_needed) {
    if (frame_index < 0 || frame_index >= manifest.frame_count) {
      throw std::runtime_error("run_query: label frame " + std::to_string(frame_index) +
                               " outside the dataset");
    }
    const Frame frame = load_frame(manifest, dir, frame_index);
    if (!frame.embeddings) {
      throw std::runtime_error("run_query: frame " + std::to_string(frame_index) +
                               " has no embeddings");
    }
    if (!pca && frame.embeddings->cols() != effective.front().embeddings.cols()) {
      throw std::runtime_error(
          "run_query: query dimensionality does not match the point features");
    }
    // With compression on, transform_rows validates the input dimensionality.
    EmbeddingSet features =
        pca ? pca->transform_rows(*frame.embeddings) : *frame.embeddings;
    const PointCategories categories = assign_point_categories(features, effective);
    for (LabelRecord& label : out) {
      if (label.frame != frame_index) continue;
      const int cat = assign_box_category(label.box, frame.points, categories);
      label.category = cat >= 0 ? effective[cat].category : "-";
    }
  }
  return out;
}

namespace {

Detection to_detection(const LabelRecord& r, int category) {
  return {r.box, r.score, category, r.frame};
}

GroundTruthBox to_gt(const LabelRecord& r, int category) {
  return {r.box, category, r.frame, r.track_id};
}

}  // namespace

std::string EvalReport::to_kv() const {
  std::string out;
  for (const auto& [key, value] : values) {
    out += key + " " + format_double(value) + "\n";
  }
  return out;
}

EvalReport run_eval(const std::vector<LabelRecord>& predictions,
                    const std::vector<LabelRecord>& ground_truth,
                    const DatasetManifest& manifest, const PipelineConfig& config) {
  config.validate();

  std::vector<int> bad_frames;
  auto check_frames = [&](const std::vector<LabelRecord>& records) {
    for (const LabelRecord& r : records) {
      if (r.frame < 0 || r.frame >= manifest.frame_count) bad_frames.push_back(r.frame);
    }
  };
  check_frames(predictions);
  check_frames(ground_truth);
  if (!bad_frames.empty()) {
    std::sort(bad_frames.begin(), bad_frames.end());
    bad_frames.erase(std::unique(bad_frames.begin(), bad_frames.end()), bad_frames.end());
    std::string list;
    for (int f : bad_frames) list += " " + std::to_string(f);
    throw std::runtime_error("run_eval: frames outside the dataset:" + list);
  }

  // Ego-centered region filter, applied in each frame's ego coordinates.
  auto in_region = [&](const LabelRecord& r) {
    const Pose& ego = manifest.frames[r.frame].ego;
    const Point3 local = ego.inverse().apply(r.box.center());
    return std::abs(local.x()) <= config.region_length / 2 &&
           std::abs(local.y()) <= config.region_width / 2;
  };
  std::vector<LabelRecord> preds, gts;
  for (const LabelRecord& r : predictions) {
    if (in_region(r)) preds.push_back(r);
  }
  for (const LabelRecord& r : ground_truth) {
    if (in_region(r)) gts.push_back(r);
  }

  std::vector<std::string> categories;
  for (const LabelRecord& r : gts) {
    if (r.category != "-" &&
        std::find(categories.begin(), categories.end(), r.category) == categories.end()) {
      categories.push_back(r.category);
    }
  }
  std::sort(categories.begin(), categories.end());
  auto category_index = [&](const std::string& name) {
    const auto it = std::find(categories.begin(), categories.end(), name);
    return it == categories.end() ? kAnyCategory : static_cast<int>(it - categories.begin());
  };

  EvalReport report;
  std::ostringstream table;
  table << "detection\n";

  std::vector<Detection> all_dets;
  std::vector<GroundTruthBox> all_gts;
  for (const LabelRecord& r : preds) all_dets.push_back(to_detection(r, category_index(r.category)));
  for (const LabelRecord& r : gts) all_gts.push_back(to_gt(r, category_index(r.category)));

  for (double threshold : config.eval_iou_thresholds) {
    std::vector<double> aps;
    for (std::size_t c = 0; c < categories.size(); ++c) {
      std::vector<Detection> dets;
      std::vector<GroundTruthBox> cat_gts;
      for (const Detection& d : all_dets) {
        if (d.category == static_cast<int>(c)) dets.push_back(d);
      }
      for (const GroundTruthBox& g : all_gts) {
        if (g.category == static_cast<int>(c)) cat_gts.push_back(g);
      }
      const double ap = average_precision(dets, cat_gts, threshold);
      aps.push_back(ap);
      report.values["ap/" + categories[c] + "@" + format_double(threshold)] = ap;
      table << "  " << categories[c] << " AP@" << format_double(threshold) << " = "
            << format_double(100.0 * ap) << "\n";
    }
    if (!aps.empty()) {
      const double map = mean_ap(aps);
      report.values["map@" + format_double(threshold)] = map;
      table << "  mAP@" << format_double(threshold) << " = " << format_double(100.0 * map)
            << "\n";
    }
    // Class-agnostic AP ignores categories on both sides.
    std::vector<Detection> ag_dets = all_dets;
    std::vector<GroundTruthBox> ag_gts = all_gts;
    for (Detection& d : ag_dets) d.category = kAnyCategory;
    for (GroundTruthBox& g : ag_gts) g.category = kAnyCategory;
    const double ap_agnostic = average_precision(ag_dets, ag_gts, threshold);
    report.values["ap/class_agnostic@" + format_double(threshold)] = ap_agnostic;
    table << "  class-agnostic AP@" << format_double(threshold) << " = "
          << format_double(100.0 * ap_agnostic) << "\n";
  }

  table << "tracking\n";
  auto tracked = [&](const std::vector<LabelRecord>& records, int category,
                     bool class_aware) {
    std::vector<TrackedBox> boxes;
    for (const LabelRecord& r : records) {
      const int cat = category_index(r.category);
      if (class_aware && cat != category) continue;
      boxes.push_back({r.box, r.track_id, r.frame, cat});
    }
    return boxes;
  };
  const MotResult agnostic =
      clear_mot(tracked(preds, 0, false), tracked(gts, 0, false), config.mot_match_iou);
  report.values["mota/class_agnostic"] = agnostic.mota;
  report.values["motp/class_agnostic"] = agnostic.motp;
  report.values["id_switches/class_agnostic"] = agnostic.id_switches;
  table << "  class-agnostic MOTA = " << format_double(agnostic.mota)
        << ", MOTP = " << format_double(agnostic.motp) << "\n";
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const MotResult mot = clear_mot(tracked(preds, static_cast<int>(c), true),
                                    tracked(gts, static_cast<int>(c), true),
                                    config.mot_match_iou);
    report.values["mota/" + categories[c]] = mot.mota;
    report.values["motp/" + categories[c]] = mot.motp;
    table << "  " << categories[c] << " MOTA = " << format_double(mot.mota)
          << ", MOTP = " << format_double(mot.motp) << "\n";
  }

  const FpTaxonomy taxonomy =
      fp_breakdown(all_dets, all_gts, config.eval_iou_thresholds.front());
  report.values["fp/localization"] = taxonomy.localization;
  report.values["fp/confusion_other"] = taxonomy.confusion_other;
  report.values["fp/confusion_background"] = taxonomy.confusion_background;
  table << "false positives\n"
        << "  localization = " << taxonomy.localization
        << ", other = " << taxonomy.confusion_other
        << ", background = " << taxonomy.confusion_background << "\n";

  report.table = table.str();
  return report;
}

}  // namespace al3d
