#include "al3d/dataset.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace al3d {

namespace fs = std::filesystem;

namespace {

void write_f32_blob(const fs::path& file, const std::vector<float>& values) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + file.string());
  // Little-endian hosts write the raw array; this tool targets LE platforms.
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

std::vector<float> read_f32_blob(const fs::path& file, std::size_t expected_count) {
  std::ifstream in(file, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cannot open: " + file.string());
  const std::streamsize bytes = in.tellg();
  const std::streamsize expected =
      static_cast<std::streamsize>(expected_count * sizeof(float));
  if (bytes != expected) {
    throw std::runtime_error("size mismatch in " + file.string() + ": expected " +
                             std::to_string(expected) + " bytes, found " +
                             std::to_string(bytes));
  }
  std::vector<float> values(expected_count);
  in.seekg(0);
  in.read(reinterpret_cast<char*>(values.data()), expected);
  if (!in) throw std::runtime_error("read failed: " + file.string());
  return values;
}

std::string format_pose(const Pose& pose) {
  std::string out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out += format_double(pose.rotation(r, c)) + " ";
  }
  for (int k = 0; k < 3; ++k) {
    out += format_double(pose.translation[k]);
    if (k < 2) out += " ";
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

DatasetManifest DatasetManifest::load(const fs::path& dir) {
  const fs::path file = dir / "manifest.txt";
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open manifest: " + file.string());

  DatasetManifest manifest;
  manifest.frame_count = -1;
  std::string line;
  bool version_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "version") {
      ss >> manifest.version;
      if (manifest.version != kVersion) {
        throw std::runtime_error("manifest version mismatch in " + file.string() +
                                 ": found " + std::to_string(manifest.version) +
                                 ", expected " + std::to_string(kVersion));
      }
      version_seen = true;
    } else if (key == "frames") {
      ss >> manifest.frame_count;
      manifest.frames.resize(manifest.frame_count);
    } else if (key == "dt") {
      ss >> manifest.dt;
    } else if (key == "embedding_dim") {
      ss >> manifest.embedding_dim;
    } else if (key == "frame_coords") {
      ss >> manifest.frame_coords;
    } else if (key == "frame") {
      FrameRecord record;
      ss >> record.index >> record.num_points >> record.points_file >>
          record.embeddings_file >> record.flow_file;
      if (record.embeddings_file == "-") record.embeddings_file.clear();
      if (record.flow_file == "-") record.flow_file.clear();
      if (record.index < 0 || record.index >= static_cast<int>(manifest.frames.size())) {
        throw std::runtime_error("manifest frame index out of range in " + file.string());
      }
      const Pose ego = manifest.frames[record.index].ego;
      record.ego = ego;
      manifest.frames[record.index] = record;
    } else if (key == "pose") {
      int index = 0;
      ss >> index;
      if (index < 0 || index >= static_cast<int>(manifest.frames.size())) {
        throw std::runtime_error("manifest pose index out of range in " + file.string());
      }
      Pose pose;
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) ss >> pose.rotation(r, c);
      }
      for (int k = 0; k < 3; ++k) ss >> pose.translation[k];
      manifest.frames[index].ego = pose;
    }
    if (!ss && key != "frame_coords") {
      throw std::runtime_error("malformed manifest line in " + file.string() + ": " + line);
    }
  }
  if (!version_seen) {
    throw std::runtime_error("manifest missing version line: " + file.string());
  }
  if (manifest.frame_count < 0 ||
      static_cast<int>(manifest.frames.size()) != manifest.frame_count) {
    throw std::runtime_error("manifest missing frame count: " + file.string());
  }
  return manifest;
}

void DatasetManifest::save(const fs::path& dir) const {
  fs::create_directories(dir);
  const fs::path file = dir / "manifest.txt";
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write manifest: " + file.string());
  out << "# point cloud sequence manifest\n";
  out << "version " << version << "\n";
  out << "frames " << frame_count << "\n";
  out << "dt " << format_double(dt) << "\n";
  out << "embedding_dim " << embedding_dim << "\n";
  out << "frame_coords " << frame_coords << "\n";
  for (const FrameRecord& record : frames) {
    out << "pose " << record.index << " " << format_pose(record.ego) << "\n";
    out << "frame " << record.index << " " << record.num_points << " "
        << record.points_file << " "
        << (record.embeddings_file.empty() ? "-" : record.embeddings_file) << " "
        << (record.flow_file.empty() ? "-" : record.flow_file) << "\n";
  }
  if (!out) throw std::runtime_error("manifest write failed: " + file.string());
}

Frame load_frame(const DatasetManifest& manifest, const fs::path& dir, int index) {
  if (index < 0 || index >= manifest.frame_count) {
    throw std::out_of_range("load_frame: index out of range");
  }
  const FrameRecord& record = manifest.frames[index];
  const std::size_t n = static_cast<std::size_t>(record.num_points);

  Frame frame;
  frame.ego = record.ego;

  const std::vector<float> pts = read_f32_blob(dir / record.points_file, n * 3);
  frame.points.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    frame.points[i] = Point3(pts[3 * i], pts[3 * i + 1], pts[3 * i + 2]);
  }

  if (!record.embeddings_file.empty()) {
    const std::size_t dim = static_cast<std::size_t>(manifest.embedding_dim);
    const std::vector<float> emb = read_f32_blob(dir / record.embeddings_file, n * dim);
    EmbeddingSet features(static_cast<int>(n), static_cast<int>(dim));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        features(static_cast<int>(i), static_cast<int>(d)) = emb[i * dim + d];
      }
    }
    frame.embeddings = std::move(features);
  }

  if (!record.flow_file.empty()) {
    const std::vector<float> raw = read_f32_blob(dir / record.flow_file, n * 3);
    FlowField flow;
    flow.dt = manifest.dt;
    flow.vectors.resize(n);
    flow.confident.assign(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
      flow.vectors[i] = Eigen::Vector3d(raw[3 * i], raw[3 * i + 1], raw[3 * i + 2]);
    }
    frame.flow = std::move(flow);
  }
  return frame;
}

void save_frame(DatasetManifest& manifest, const fs::path& dir, int index, const Frame& frame) {
  if (index < 0 || index >= static_cast<int>(manifest.frames.size())) {
    throw std::out_of_range("save_frame: index out of range");
  }
  fs::create_directories(dir / "frames");
  char stem[32];
  std::snprintf(stem, sizeof(stem), "frames/%06d", index);

  FrameRecord& record = manifest.frames[index];
  record.index = index;
  record.num_points = static_cast<int>(frame.points.size());
  record.ego = frame.ego;

  std::vector<float> pts(frame.points.size() * 3);
  for (std::size_t i = 0; i < frame.points.size(); ++i) {
    pts[3 * i] = static_cast<float>(frame.points[i].x());
    pts[3 * i + 1] = static_cast<float>(frame.points[i].y());
    pts[3 * i + 2] = static_cast<float>(frame.points[i].z());
  }
  record.points_file = std::string(stem) + ".points.f32";
  write_f32_blob(dir / record.points_file, pts);

  record.embeddings_file.clear();
  if (frame.embeddings) {
    const EmbeddingSet& emb = *frame.embeddings;
    if (emb.rows() != static_cast<int>(frame.points.size())) {
      throw std::invalid_argument("save_frame: embedding row count mismatch");
    }
    std::vector<float> values(static_cast<std::size_t>(emb.rows()) * emb.cols());
    for (int i = 0; i < emb.rows(); ++i) {
      for (int d = 0; d < emb.cols(); ++d) values[i * emb.cols() + d] = emb(i, d);
    }
    record.embeddings_file = std::string(stem) + ".emb.f32";
    write_f32_blob(dir / record.embeddings_file, values);
  }

  record.flow_file.clear();
  if (frame.flow) {
    const FlowField& flow = *frame.flow;
    if (flow.vectors.size() != frame.points.size()) {
      throw std::invalid_argument("save_frame: flow size mismatch");
    }
    std::vector<float> values(flow.vectors.size() * 3);
    for (std::size_t i = 0; i < flow.vectors.size(); ++i) {
      values[3 * i] = static_cast<float>(flow.vectors[i].x());
      values[3 * i + 1] = static_cast<float>(flow.vectors[i].y());
      values[3 * i + 2] = static_cast<float>(flow.vectors[i].z());
    }
    record.flow_file = std::string(stem) + ".flow.f32";
    write_f32_blob(dir / record.flow_file, values);
  }
}

void save_dataset(const SynthDataset& dataset, const fs::path& dir) {
  DatasetManifest manifest;
  manifest.frame_count = static_cast<int>(dataset.frames.size());
  manifest.embedding_dim = dataset.dim;
  manifest.dt = dataset.dt;
  manifest.frames.resize(manifest.frame_count);

  for (int t = 0; t < manifest.frame_count; ++t) {
    const SynthFrame& sf = dataset.frames[t];
    Frame frame;
    frame.points = sf.points;
    frame.embeddings = sf.embeddings;
    FlowField flow;
    flow.dt = dataset.dt;
    flow.vectors = sf.flow;
    flow.confident.assign(sf.flow.size(), 1);
    frame.flow = std::move(flow);
    frame.ego = sf.ego;
    save_frame(manifest, dir, t, frame);
  }
  manifest.save(dir);

  std::vector<LabelRecord> gt;
  for (const GtBox& box : dataset.gt_boxes) {
    LabelRecord record;
    record.frame = box.frame;
    record.track_id = box.track_id;
    record.box = box.box;
    record.score = 1.0;
    record.category = box.category;
    gt.push_back(record);
  }
  save_labels(dir / "gt_labels.txt", gt);
  save_queries(dir / "queries.txt", dataset.queries);
  save_queries(dir / "bg_queries.txt", dataset.bg_queries);
}

std::vector<LabelRecord> load_labels(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open labels: " + file.string());
  std::vector<LabelRecord> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    LabelRecord r;
    ss >> r.frame >> r.track_id >> r.box.cx >> r.box.cy >> r.box.cz >> r.box.length >>
        r.box.width >> r.box.height >> r.box.heading >> r.score >> r.category;
    if (!ss) throw std::runtime_error("malformed label line in " + file.string() + ": " + line);
    labels.push_back(std::move(r));
  }
  return labels;
}

void save_labels(const fs::path& file, const std::vector<LabelRecord>& labels) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write labels: " + file.string());
  out << "# frame track_id cx cy cz length width height heading score category\n";
  for (const LabelRecord& r : labels) {
    out << r.frame << " " << r.track_id << " " << format_double(r.box.cx) << " "
        << format_double(r.box.cy) << " " << format_double(r.box.cz) << " "
        << format_double(r.box.length) << " " << format_double(r.box.width) << " "
        << format_double(r.box.height) << " " << format_double(r.box.heading) << " "
        << format_double(r.score) << " " << (r.category.empty() ? "-" : r.category) << "\n";
  }
  if (!out) throw std::runtime_error("label write failed: " + file.string());
}

std::vector<TextQuery> load_queries(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open queries: " + file.string());
  std::vector<TextQuery> queries;
  std::vector<std::vector<float>> rows_of;  // parallel to queries
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const std::size_t tab1 = line.find('\t');
    const std::size_t tab2 = tab1 == std::string::npos ? std::string::npos
                                                       : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) {
      throw std::runtime_error("malformed query line in " + file.string() + ": " + line);
    }
    const std::string category = line.substr(0, tab1);
    const std::string prompt = line.substr(tab1 + 1, tab2 - tab1 - 1);
    std::istringstream values(line.substr(tab2 + 1));
    std::vector<float> row;
    float v = 0;
    while (values >> v) row.push_back(v);
    if (row.empty()) {
      throw std::runtime_error("query line has no embedding values in " + file.string());
    }

    std::size_t q = 0;
    for (; q < queries.size(); ++q) {
      if (queries[q].category == category) break;
    }
    if (q == queries.size()) {
      queries.push_back({category, {}, {}});
      rows_of.emplace_back();
    }
    if (!rows_of[q].empty() && rows_of[q].size() % row.size() != 0) {
      throw std::runtime_error("query dimensionality differs within " + file.string());
    }
    queries[q].prompts.push_back(prompt);
    rows_of[q].insert(rows_of[q].end(), row.begin(), row.end());
  }
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const int prompts = static_cast<int>(queries[q].prompts.size());
    const int dim = static_cast<int>(rows_of[q].size()) / prompts;
    Eigen::MatrixXf emb(prompts, dim);
    for (int p = 0; p < prompts; ++p) {
      for (int d = 0; d < dim; ++d) emb(p, d) = rows_of[q][p * dim + d];
    }
    queries[q].embeddings = std::move(emb);
  }
  return queries;
}

void save_queries(const fs::path& file, const std::vector<TextQuery>& queries) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write queries: " + file.string());
  out << "# category\tprompt\tembedding values\n";
  for (const TextQuery& q : queries) {
    for (int p = 0; p < static_cast<int>(q.prompts.size()); ++p) {
      out << q.category << "\t" << q.prompts[p] << "\t";
      for (int d = 0; d < q.embeddings.cols(); ++d) {
        out << format_double(q.embeddings(p, d));
        if (d + 1 < q.embeddings.cols()) out << " ";
      }
      out << "\n";
    }
  }
  if (!out) throw std::runtime_error("query write failed: " + file.string());
}

}  // namespace al3d
