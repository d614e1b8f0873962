#pragma once

#include "al3d/flow.hpp"
#include "al3d/geometry.hpp"
#include "al3d/semantics.hpp"
#include "al3d/synth.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace al3d {

/// One LiDAR sweep with optional per-point attributes, world frame.
struct Frame {
  PointCloud points;
  std::optional<EmbeddingSet> embeddings;
  std::optional<FlowField> flow;
  Pose ego;
};

struct FrameRecord {
  int index = 0;
  int num_points = 0;
  std::string points_file;
  std::string embeddings_file;  // empty = absent
  std::string flow_file;        // empty = absent
  Pose ego;
};

/// Sequence directory layout: a text manifest plus one raw float32
/// little-endian blob per array (points N x 3, embeddings N x D, flow N x 3).
struct DatasetManifest {
  static constexpr int kVersion = 1;

  int version = kVersion;
  int frame_count = 0;
  int embedding_dim = 0;
  double dt = 0.1;
  std::string frame_coords = "world";
  std::vector<FrameRecord> frames;

  static DatasetManifest load(const std::filesystem::path& dir);
  void save(const std::filesystem::path& dir) const;
};

/// Reads one frame; validates blob byte lengths against the manifest before
/// touching any payload. Errors name the offending file.
Frame load_frame(const DatasetManifest& manifest, const std::filesystem::path& dir, int index);

/// Writes the frame blobs and refreshes the manifest record (manifest.save
/// persists it).
void save_frame(DatasetManifest& manifest, const std::filesystem::path& dir, int index,
                const Frame& frame);

/// Writes a complete synthetic dataset: manifest, per-frame blobs including
/// ground-truth flow, ground-truth labels (gt_labels.txt), and the query
/// manifests (queries.txt, bg_queries.txt).
void save_dataset(const SynthDataset& dataset, const std::filesystem::path& dir);

/// Line format: frame track_id cx cy cz length width height heading score category
struct LabelRecord {
  int frame = 0;
  int track_id = 0;
  Box7 box;
  double score = 0.0;
  std::string category = "-";  // "-" = unassigned
};

std::vector<LabelRecord> load_labels(const std::filesystem::path& file);
void save_labels(const std::filesystem::path& file, const std::vector<LabelRecord>& labels);

/// Query manifest: one tab-separated record per prompt
/// (category <tab> prompt <tab> D space-separated float32 values).
std::vector<TextQuery> load_queries(const std::filesystem::path& file);
void save_queries(const std::filesystem::path& file, const std::vector<TextQuery>& queries);

/// Fixed-format float used in all text outputs so identical runs are
/// byte-identical.
std::string format_double(double value);

}  // namespace al3d
