#include "al3d/clustering.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <deque>

using namespace al3d;

namespace {

// O(n^2) reference with the same published density-clustering semantics,
// built on plain linear scans instead of the spatial index.
std::vector<int> brute_force_dbscan(const PointCloud& pts,
                                    const std::vector<Eigen::Vector3d>& flow,
                                    double eps, int min_pts, double alpha) {
  const int n = static_cast<int>(pts.size());
  auto neighbors = [&](int i) {
    std::vector<int> out;
    for (int j = 0; j < n; ++j) {
      double d2 = (pts[i] - pts[j]).squaredNorm();
      if (alpha > 0) d2 += (alpha * (flow[i] - flow[j])).squaredNorm();
      if (d2 <= eps * eps) out.push_back(j);
    }
    return out;
  };
  constexpr int kUndef = -2;
  std::vector<int> labels(n, kUndef);
  int cid = 0;
  for (int i = 0; i < n; ++i) {
    if (labels[i] != kUndef) continue;
    const std::vector<int> seeds0 = neighbors(i);
    if (static_cast<int>(seeds0.size()) < min_pts) {
      labels[i] = kNoiseLabel;
      continue;
    }
    labels[i] = cid;
    std::deque<int> seeds(seeds0.begin(), seeds0.end());
    while (!seeds.empty()) {
      const int q = seeds.front();
      seeds.pop_front();
      if (labels[q] == kNoiseLabel) labels[q] = cid;
      if (labels[q] != kUndef) continue;
      labels[q] = cid;
      const std::vector<int> qn = neighbors(q);
      if (static_cast<int>(qn.size()) >= min_pts) seeds.insert(seeds.end(), qn.begin(), qn.end());
    }
    ++cid;
  }
  return labels;
}

FlowField zero_flow(std::size_t n) {
  FlowField flow;
  flow.dt = 0.1;
  flow.vectors.assign(n, Eigen::Vector3d::Zero());
  flow.confident.assign(n, 1);
  return flow;
}

}  // namespace

TEST_CASE("st_cluster separates two distant blobs") {
  Rng rng(61);
  PointCloud pts;
  for (int i = 0; i < 40; ++i) {
    pts.emplace_back(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0);
  }
  for (int i = 0; i < 40; ++i) {
    pts.emplace_back(10 + rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0);
  }
  StClusterParams params;  // defaults: eps 1.0, minPts 5
  const ClusterLabeling out = st_cluster(pts, zero_flow(pts.size()), std::nullopt, params);
  CHECK(out.num_clusters == 2);
  for (int i = 0; i < 40; ++i) CHECK(out.labels[i] == out.labels[0]);
  for (int i = 40; i < 80; ++i) CHECK(out.labels[i] == out.labels[40]);
  CHECK(out.labels[0] != out.labels[40]);
}

TEST_CASE("co-located points split by flow when alpha > 0") {
  // Two interleaved sets at the same location whose flows differ by much
  // more than eps/alpha.
  Rng rng(62);
  PointCloud pts;
  FlowField flow;
  flow.dt = 0.1;
  for (int i = 0; i < 30; ++i) {
    pts.emplace_back(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), 0);
    flow.vectors.emplace_back(0, 0, 0);
    pts.emplace_back(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), 0);
    flow.vectors.emplace_back(8, 0, 0);  // alpha 0.5 -> 4 m of feature distance
  }
  flow.confident.assign(pts.size(), 1);

  StClusterParams params;
  params.alpha = 0.5;
  const ClusterLabeling out = st_cluster(pts, flow, std::nullopt, params);
  CHECK(out.num_clusters == 2);
  for (std::size_t i = 0; i + 2 < pts.size(); i += 2) {
    CHECK(out.labels[i] == out.labels[i + 2]);
    CHECK(out.labels[i + 1] == out.labels[i + 3]);
    CHECK(out.labels[i] != out.labels[i + 1]);
  }

  // Matches the brute-force reference on the same composite metric.
  const std::vector<int> reference =
      brute_force_dbscan(pts, flow.vectors, params.eps_spatial, params.min_pts, params.alpha);
  CHECK(out.labels == reference);
}

TEST_CASE("st_cluster with alpha = beta = 0 equals spatial DBSCAN") {
  Rng rng(63);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 100 + static_cast<int>(rng.uniform_index(900));
    PointCloud pts;
    for (int i = 0; i < n; ++i) {
      // Mixture of clumps and sparse noise.
      if (rng.uniform() < 0.7) {
        const double cx = std::floor(rng.uniform(0, 4)) * 6.0;
        const double cy = std::floor(rng.uniform(0, 4)) * 6.0;
        pts.emplace_back(cx + rng.uniform(-1, 1), cy + rng.uniform(-1, 1),
                         rng.uniform(-0.5, 0.5));
      } else {
        pts.emplace_back(rng.uniform(-5, 25), rng.uniform(-5, 25), rng.uniform(-2, 2));
      }
    }
    StClusterParams params;
    params.alpha = 0;
    params.beta = 0;
    const ClusterLabeling out = st_cluster(pts, zero_flow(pts.size()), std::nullopt, params);
    const std::vector<int> reference =
        brute_force_dbscan(pts, zero_flow(pts.size()).vectors, params.eps_spatial,
                           params.min_pts, 0.0);
    CHECK(out.labels == reference);
  }
}

TEST_CASE("st_cluster labels are contiguous and validate inputs") {
  Rng rng(64);
  const PointCloud pts = testutil::random_cloud(rng, 200, 4.0);
  StClusterParams params;
  const ClusterLabeling out = st_cluster(pts, zero_flow(pts.size()), std::nullopt, params);
  std::vector<bool> seen(out.num_clusters, false);
  for (int label : out.labels) {
    if (label == kNoiseLabel) continue;
    REQUIRE(label >= 0);
    REQUIRE(label < out.num_clusters);
    seen[label] = true;
  }
  for (bool s : seen) CHECK(s);

  params.eps_spatial = 0;
  CHECK_THROWS_AS(st_cluster(pts, zero_flow(pts.size()), std::nullopt, params),
                  std::invalid_argument);
  params.eps_spatial = 1.0;
  params.min_pts = 0;
  CHECK_THROWS_AS(st_cluster(pts, zero_flow(pts.size()), std::nullopt, params),
                  std::invalid_argument);
}

TEST_CASE("beta weights embeddings into the metric") {
  // Identical positions, orthogonal embeddings: beta above eps separates them.
  PointCloud pts;
  EmbeddingSet emb(40, 4);
  emb.setZero();
  FlowField flow = zero_flow(40);
  for (int i = 0; i < 40; ++i) {
    pts.emplace_back(0.01 * i, 0, 0);
    emb(i, i % 2) = 1.0f;
  }
  StClusterParams params;
  params.alpha = 0;
  params.beta = 2.0;  // orthogonal unit embeddings differ by sqrt(2) * beta > eps
  const ClusterLabeling split = st_cluster(pts, flow, emb, params);
  CHECK(split.num_clusters == 2);

  params.beta = 0.0;
  const ClusterLabeling merged = st_cluster(pts, flow, emb, params);
  CHECK(merged.num_clusters == 1);
}
