#include "al3d/config.hpp"
#include "al3d/dataset.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <fstream>

using namespace al3d;

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Coordinates are drawn as float32 so the storage round trip is exact.
Frame random_frame(Rng& rng, int n, int dim) {
  Frame frame;
  for (int i = 0; i < n; ++i) {
    const float x = static_cast<float>(rng.uniform(-20, 20));
    const float y = static_cast<float>(rng.uniform(-20, 20));
    const float z = static_cast<float>(rng.uniform(-20, 20));
    frame.points.emplace_back(x, y, z);
  }
  EmbeddingSet emb(n, dim);
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < dim; ++d) emb(i, d) = static_cast<float>(rng.uniform(-1, 1));
  }
  frame.embeddings = emb;
  FlowField flow;
  flow.dt = 0.1;
  for (int i = 0; i < n; ++i) {
    const float x = static_cast<float>(rng.uniform(-2, 2));
    const float y = static_cast<float>(rng.uniform(-2, 2));
    const float z = static_cast<float>(rng.uniform(-1, 1));
    flow.vectors.emplace_back(x, y, z);
  }
  flow.confident.assign(n, 1);
  frame.flow = flow;
  frame.ego = Pose::from_yaw(rng.uniform(-3, 3), {rng.uniform(-5, 5), rng.uniform(-5, 5), 0.6});
  return frame;
}

}  // namespace

TEST_CASE("frame save/load round trip is bit identical") {
  TempDir dir("al3d_io_roundtrip");
  Rng rng(111);

  DatasetManifest manifest;
  manifest.frame_count = 2;
  manifest.embedding_dim = 8;
  manifest.dt = 0.1;
  manifest.frames.resize(2);

  std::vector<Frame> originals;
  for (int t = 0; t < 2; ++t) {
    Frame frame = random_frame(rng, 100 + t, 8);
    save_frame(manifest, dir.path, t, frame);
    originals.push_back(std::move(frame));
  }
  manifest.save(dir.path);

  const DatasetManifest loaded_manifest = DatasetManifest::load(dir.path);
  CHECK(loaded_manifest.frame_count == 2);
  CHECK(loaded_manifest.embedding_dim == 8);
  for (int t = 0; t < 2; ++t) {
    const Frame loaded = load_frame(loaded_manifest, dir.path, t);
    CHECK(loaded.points == originals[t].points);
    CHECK(*loaded.embeddings == *originals[t].embeddings);
    CHECK(loaded.flow->vectors == originals[t].flow->vectors);
    CHECK((loaded.ego.translation - originals[t].ego.translation).norm() < 1e-7);
  }
}

TEST_CASE("truncated blob reports a size mismatch naming the file") {
  TempDir dir("al3d_io_truncated");
  Rng rng(112);
  DatasetManifest manifest;
  manifest.frame_count = 1;
  manifest.embedding_dim = 4;
  manifest.frames.resize(1);
  save_frame(manifest, dir.path, 0, random_frame(rng, 50, 4));
  manifest.save(dir.path);

  // Truncate the points blob.
  const fs::path points = dir.path / manifest.frames[0].points_file;
  fs::resize_file(points, fs::file_size(points) - 4);

  const DatasetManifest loaded = DatasetManifest::load(dir.path);
  CHECK_THROWS_WITH_AS(load_frame(loaded, dir.path, 0),
                       doctest::Contains("size mismatch"), std::runtime_error);
  CHECK_THROWS_WITH_AS(load_frame(loaded, dir.path, 0),
                       doctest::Contains("points.f32"), std::runtime_error);
}

TEST_CASE("manifest version mismatch fails before any payload read") {
  TempDir dir("al3d_io_version");
  Rng rng(113);
  DatasetManifest manifest;
  manifest.frame_count = 1;
  manifest.embedding_dim = 4;
  manifest.frames.resize(1);
  save_frame(manifest, dir.path, 0, random_frame(rng, 20, 4));
  manifest.save(dir.path);

  // Bump the version in place.
  std::ifstream in(dir.path / "manifest.txt");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  const std::size_t pos = text.find("version 1");
  text.replace(pos, 9, "version 2");
  std::ofstream out(dir.path / "manifest.txt");
  out << text;
  out.close();

  CHECK_THROWS_WITH_AS(DatasetManifest::load(dir.path),
                       doctest::Contains("version mismatch"), std::runtime_error);
}

TEST_CASE("labels round trip") {
  TempDir dir("al3d_io_labels");
  std::vector<LabelRecord> labels;
  Rng rng(114);
  for (int i = 0; i < 25; ++i) {
    LabelRecord r;
    r.frame = static_cast<int>(rng.uniform_index(10));
    r.track_id = i;
    r.box = testutil::random_box(rng, 10.0);
    r.score = rng.uniform();
    r.category = i % 3 == 0 ? "vehicle" : (i % 3 == 1 ? "vru" : "-");
    labels.push_back(r);
  }
  save_labels(dir.path / "labels.txt", labels);
  const std::vector<LabelRecord> loaded = load_labels(dir.path / "labels.txt");
  REQUIRE(loaded.size() == labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    CHECK(loaded[i].frame == labels[i].frame);
    CHECK(loaded[i].track_id == labels[i].track_id);
    CHECK(loaded[i].score == doctest::Approx(labels[i].score).epsilon(1e-7));
    CHECK(loaded[i].box.cx == doctest::Approx(labels[i].box.cx).epsilon(1e-7));
    CHECK(loaded[i].box.heading == doctest::Approx(labels[i].box.heading).epsilon(1e-7));
    CHECK(loaded[i].category == labels[i].category);
  }
}

TEST_CASE("query manifests round trip with multi-word prompts") {
  TempDir dir("al3d_io_queries");
  std::vector<TextQuery> queries(2);
  queries[0].category = "vehicle";
  queries[0].prompts = {"car", "parked vehicle", "school bus"};
  queries[0].embeddings = Eigen::MatrixXf::Random(3, 6);
  queries[1].category = "vru";
  queries[1].prompts = {"pedestrian"};
  queries[1].embeddings = Eigen::MatrixXf::Random(1, 6);

  save_queries(dir.path / "queries.txt", queries);
  const std::vector<TextQuery> loaded = load_queries(dir.path / "queries.txt");
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].category == "vehicle");
  CHECK(loaded[0].prompts == queries[0].prompts);
  CHECK(loaded[0].embeddings.rows() == 3);
  CHECK((loaded[0].embeddings - queries[0].embeddings).cwiseAbs().maxCoeff() < 1e-6f);
  CHECK(loaded[1].prompts == std::vector<std::string>{"pedestrian"});
}

TEST_CASE("config defaults match the published operating point") {
  const PipelineConfig config = PipelineConfig::defaults();
  CHECK(config.eps_sf == 1.0);
  CHECK(config.eps_bg == 0.02);
  CHECK(config.r_bg == 0.99);
  CHECK(config.cluster_eps == 1.0);
  CHECK(config.pca_dim == 64);
  CHECK(config.background_categories ==
        std::vector<std::string>{"vegetation", "road", "street", "sky", "tree", "building",
                                 "house", "skyscraper", "wall", "fence", "sidewalk"});
  CHECK(config.vehicle_prompts.size() == 12);
  CHECK(config.vru_prompts ==
        std::vector<std::string>{"cyclist", "human", "person", "pedestrian", "bicycle"});
}

TEST_CASE("config save/load round trip and validation") {
  TempDir dir("al3d_io_config");
  PipelineConfig config = PipelineConfig::defaults();
  config.eps_sf = 0.0;
  config.beta = 0.25;
  config.nms_iou_kind = "3d";
  config.eval_iou_thresholds = {0.3, 0.6};
  config.save(dir.path / "pipeline.cfg");

  const PipelineConfig loaded = PipelineConfig::load(dir.path / "pipeline.cfg");
  CHECK(loaded.eps_sf == 0.0);
  CHECK(loaded.beta == 0.25);
  CHECK(loaded.nms_iou_kind == "3d");
  CHECK(loaded.eval_iou_thresholds == std::vector<double>{0.3, 0.6});
  CHECK(loaded.background_categories == config.background_categories);
  CHECK(loaded.vehicle_prompts == config.vehicle_prompts);

  SUBCASE("invalid values are rejected") {
    PipelineConfig bad = PipelineConfig::defaults();
    bad.r_bg = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = PipelineConfig::defaults();
    bad.nms_iou_kind = "voxel";
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
  SUBCASE("unknown keys are rejected") {
    std::ofstream out(dir.path / "bad.cfg");
    out << "no_such_key = 1\n";
    out.close();
    CHECK_THROWS_WITH_AS(PipelineConfig::load(dir.path / "bad.cfg"),
                         doctest::Contains("unknown config key"), std::runtime_error);
  }
}
