#pragma once

#include "al3d/config.hpp"
#include "al3d/dataset.hpp"
#include "al3d/metrics.hpp"
#include "al3d/tracking.hpp"

#include <map>

namespace al3d {

struct AutolabelOptions {
  int workers = 1;
  bool bg_filter = true;  // requires embeddings and bg_queries.txt when on
};

struct AutolabelResult {
  std::vector<LabeledBox> labels;  // cleaned, per frame
  std::vector<std::vector<Proposal>> per_frame_proposals;  // visible extents
  std::vector<Track> tracks;                               // post length filter
};

/// The full auto-labeling pass over one sequence: features and flow in, boxes
/// and track ids out. Per-frame stages fan out over `workers`; the result is
/// identical for any worker count.
AutolabelResult run_autolabel(const DatasetManifest& manifest,
                              const std::filesystem::path& dir, const PipelineConfig& config,
                              const AutolabelOptions& options = {});

std::vector<LabelRecord> labels_to_records(const std::vector<LabeledBox>& labels,
                                           const std::vector<TextQuery>& queries);

/// Estimates per-frame flow (final frame registered backward and negated) and
/// writes full-size flow blobs next to the frames, updating the manifest.
void run_flow(DatasetManifest& manifest, const std::filesystem::path& dir,
              const PipelineConfig& config, int workers = 1);

/// Open-vocabulary category assignment for existing labels by majority vote
/// of the enclosed points. With pca_enabled the features and the query
/// embeddings are compressed by one shared model before scoring.
std::vector<LabelRecord> run_query(const std::vector<LabelRecord>& labels,
                                   const DatasetManifest& manifest,
                                   const std::filesystem::path& dir,
                                   const std::vector<TextQuery>& queries,
                                   const PipelineConfig& config);

struct EvalReport {
  std::map<std::string, double> values;  // machine-readable key/value pairs
  std::string table;                     // human-readable summary

  std::string to_kv() const;
};

/// Detection AP per category and threshold (ego-centered region filter),
/// mAP, CLEAR-MOT, and the false-positive taxonomy.
EvalReport run_eval(const std::vector<LabelRecord>& predictions,
                    const std::vector<LabelRecord>& ground_truth,
                    const DatasetManifest& manifest, const PipelineConfig& config);

}  // namespace al3d
