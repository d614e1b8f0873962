#include "al3d/tracking.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <set>

using namespace al3d;

namespace {

constexpr double kPi = 3.14159265358979323846;

Proposal make_proposal(const Box7& box, const Eigen::Vector3d& mean_flow,
                       std::vector<int> indices = {}) {
  Proposal p;
  p.box = box;
  p.mean_flow = mean_flow;
  p.point_indices = std::move(indices);
  return p;
}

bool is_symmetric_psd(const Eigen::Matrix<double, 6, 6>& cov) {
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> solver(cov);
  return solver.eigenvalues().minCoeff() >= -1e-9;
}

}  // namespace

TEST_CASE("kf_predict advances at constant velocity") {
  KalmanParams params;
  KalmanState state = kf_init({0, 0, 0}, {1, 0, 0}, params);
  state = kf_predict(state, 1.0, params.process_noise);
  CHECK(state.position().x() == doctest::Approx(1.0));
  CHECK(state.velocity().x() == doctest::Approx(1.0));
  CHECK(is_symmetric_psd(state.covariance));
}

TEST_CASE("kf_update with zero measurement noise pins the position") {
  KalmanParams params;
  KalmanState state = kf_init({0, 0, 0}, {0, 0, 0}, params);
  state = kf_predict(state, 0.1, params.process_noise);
  state = kf_update(state, {3.5, -1.25, 0.75}, 0.0);
  CHECK(state.position().x() == doctest::Approx(3.5));
  CHECK(state.position().y() == doctest::Approx(-1.25));
  CHECK(state.position().z() == doctest::Approx(0.75));
}

TEST_CASE("kf rejects a non-PSD covariance") {
  KalmanParams params;
  KalmanState state = kf_init({0, 0, 0}, {0, 0, 0}, params);
  state.covariance(0, 0) = -1.0;
  CHECK_THROWS_AS(kf_predict(state, 0.1, 1.0), std::invalid_argument);
  state.covariance = Eigen::Matrix<double, 6, 6>::Identity();
  state.covariance(0, 1) = 0.5;  // asymmetric
  CHECK_THROWS_AS(kf_update(state, {0, 0, 0}, 0.1), std::invalid_argument);
}

TEST_CASE("kf converges to the Riccati fixed point on a straight track") {
  const double dt = 0.1, q = 1.0, r = 0.1;
  KalmanParams params;
  params.process_noise = q;

  // Oracle: iterate the covariance recursion alone to its fixed point.
  Eigen::Matrix<double, 6, 6> f = Eigen::Matrix<double, 6, 6>::Identity();
  f.topRightCorner<3, 3>() = Eigen::Matrix3d::Identity() * dt;
  Eigen::Matrix<double, 6, 6> qm = Eigen::Matrix<double, 6, 6>::Zero();
  qm.topLeftCorner<3, 3>() = Eigen::Matrix3d::Identity() * (q * q * dt * dt * dt * dt / 4);
  qm.topRightCorner<3, 3>() = Eigen::Matrix3d::Identity() * (q * q * dt * dt * dt / 2);
  qm.bottomLeftCorner<3, 3>() = qm.topRightCorner<3, 3>();
  qm.bottomRightCorner<3, 3>() = Eigen::Matrix3d::Identity() * (q * q * dt * dt);
  Eigen::Matrix<double, 3, 6> h = Eigen::Matrix<double, 3, 6>::Zero();
  h.leftCols<3>() = Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d rm = Eigen::Matrix3d::Identity() * (r * r);

  Eigen::Matrix<double, 6, 6> p = Eigen::Matrix<double, 6, 6>::Identity();
  for (int i = 0; i < 3000; ++i) {
    const Eigen::Matrix<double, 6, 6> prior = f * p * f.transpose() + qm;
    const Eigen::Matrix3d s = h * prior * h.transpose() + rm;
    const Eigen::Matrix<double, 6, 3> k = prior * h.transpose() * s.inverse();
    p = prior - k * h * prior;
  }

  KalmanState state = kf_init({0, 0, 0}, {0, 0, 0}, params);
  for (int i = 1; i <= 600; ++i) {
    state = kf_predict(state, dt, q);
    const Eigen::Vector3d truth(2.0 * i * dt, -1.0 * i * dt, 0.0);
    state = kf_update(state, truth, r);
  }
  CHECK((state.covariance - p).cwiseAbs().maxCoeff() < 1e-9);
  // Noiseless straight measurements: the estimate locks onto the truth.
  CHECK((state.position() - Eigen::Vector3d(2.0 * 60, -60, 0)).norm() < 1e-3);
}

TEST_CASE("kf covariance stays symmetric PSD over random cycles") {
  Rng rng(81);
  KalmanParams params;
  KalmanState state = kf_init({0, 0, 0}, {1, 1, 0}, params);
  for (int i = 0; i < 1000; ++i) {
    state = kf_predict(state, rng.uniform(0.01, 0.5), rng.uniform(0.1, 3.0));
    if (rng.uniform() < 0.8) {
      state = kf_update(state,
                        {rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-2, 2)},
                        rng.uniform(0.0, 0.5));
    }
    REQUIRE(is_symmetric_psd(state.covariance));
  }
}

TEST_CASE("solve_assignment picks the global minimum") {
  Eigen::MatrixXd cost(2, 2);
  cost << 1.0, 2.0, 2.0, 100.0;
  // Greedy would take (0,0)+(1,1)=101; the optimum is (0,1)+(1,0)=4.
  const std::vector<int> assignment = solve_assignment(cost, 50.0);
  CHECK(assignment == std::vector<int>{1, 0});

  SUBCASE("forbidden entries stay unmatched") {
    Eigen::MatrixXd gated(2, 1);
    gated << 1.0, 5.0;
    const std::vector<int> out = solve_assignment(gated, 3.0);
    CHECK(out == std::vector<int>{0, -1});
  }
}

TEST_CASE("track_proposals scenarios") {
  TrackingParams params;
  params.dt = 0.1;

  SUBCASE("single object over 10 frames gives one full track") {
    std::vector<std::vector<Proposal>> frames;
    for (int t = 0; t < 10; ++t) {
      const Box7 box{0.2 * t, 0, 0.5, 2, 1, 1, 0};
      frames.push_back({make_proposal(box, {2, 0, 0})});
    }
    const std::vector<Track> tracks = track_proposals(frames, params);
    REQUIRE(tracks.size() == 1);
    CHECK(tracks[0].length() == 10);
    for (int t = 0; t < 10; ++t) CHECK(tracks[0].observations[t].frame == t);
  }

  SUBCASE("two parallel objects keep distinct identities") {
    std::vector<std::vector<Proposal>> frames;
    for (int t = 0; t < 10; ++t) {
      const Box7 a{0.3 * t, 0, 0.5, 2, 1, 1, 0};
      const Box7 b{0.3 * t, 10, 0.5, 2, 1, 1, 0};
      frames.push_back({make_proposal(a, {3, 0, 0}), make_proposal(b, {3, 0, 0})});
    }
    const std::vector<Track> tracks = track_proposals(frames, params);
    REQUIRE(tracks.size() == 2);
    for (const Track& track : tracks) {
      CHECK(track.length() == 10);
      const double y0 = track.observations[0].proposal.box.cy;
      for (const TrackObservation& obs : track.observations) {
        CHECK(obs.proposal.box.cy == doctest::Approx(y0));  // no identity swap
      }
    }
  }

  SUBCASE("a one-frame detection gap coasts through") {
    std::vector<std::vector<Proposal>> frames;
    for (int t = 0; t < 8; ++t) {
      if (t == 4) {
        frames.push_back({});
        continue;
      }
      const Box7 box{0.2 * t, 0, 0.5, 2, 1, 1, 0};
      frames.push_back({make_proposal(box, {2, 0, 0})});
    }
    const std::vector<Track> tracks = track_proposals(frames, params);
    REQUIRE(tracks.size() == 1);
    CHECK(tracks[0].length() == 7);
  }

  SUBCASE("a gap beyond max_misses splits the track") {
    std::vector<std::vector<Proposal>> frames;
    for (int t = 0; t < 10; ++t) {
      if (t >= 3 && t <= 5) {
        frames.push_back({});
        continue;
      }
      const Box7 box{0.1 * t, 0, 0.5, 2, 1, 1, 0};
      frames.push_back({make_proposal(box, {1, 0, 0})});
    }
    const std::vector<Track> tracks = track_proposals(frames, params);
    CHECK(tracks.size() == 2);
  }

  SUBCASE("no proposal feeds two tracks in one frame") {
    std::vector<std::vector<Proposal>> frames;
    for (int t = 0; t < 6; ++t) {
      const Box7 a{0.0, 0.2 * t, 0.5, 2, 1, 1, 0};
      const Box7 b{2.5, 0.2 * t, 0.5, 2, 1, 1, 0};  // within each other's gate
      frames.push_back({make_proposal(a, {0, 2, 0}), make_proposal(b, {0, 2, 0})});
    }
    const std::vector<Track> tracks = track_proposals(frames, params);
    REQUIRE(tracks.size() == 2);
    for (int t = 0; t < 6; ++t) {
      const double xa = tracks[0].observations[t].proposal.box.cx;
      const double xb = tracks[1].observations[t].proposal.box.cx;
      CHECK(xa != xb);
    }
    // Frame indices strictly increase within each track.
    for (const Track& track : tracks) {
      for (std::size_t i = 1; i < track.observations.size(); ++i) {
        CHECK(track.observations[i].frame > track.observations[i - 1].frame);
      }
    }
  }
}

namespace {

// A track whose member points come from sliding windows over a static box:
// early frames see the front portion, late frames the rear.
struct SlidingTrack {
  Track track;
  std::vector<PointCloud> frames;
  Box7 true_box;
  double max_visible_length = 0;
};

SlidingTrack make_sliding_track(Rng& rng, int num_frames, double window_width) {
  SlidingTrack out;
  out.true_box = {0, 0, 1, 4.6, 1.9, 1.5, 0};
  out.track.id = 0;
  const double lo0 = -out.true_box.length / 2;
  const double hi0 = out.true_box.length / 2;
  for (int t = 0; t < num_frames; ++t) {
    const double start =
        lo0 + (hi0 - lo0 - window_width) * (static_cast<double>(t) / (num_frames - 1));
    PointCloud pts;
    for (int i = 0; i < 260; ++i) {
      const double x = rng.uniform(start, start + window_width);
      const double y = rng.uniform(-0.95, 0.95);
      const double z = rng.uniform(0.25, 1.75);
      pts.emplace_back(x, y, z);
    }
    std::vector<int> indices(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) indices[i] = static_cast<int>(i);
    const Box7 visible = fit_tightest_box(pts, 0.0);
    out.max_visible_length = std::max(out.max_visible_length, visible.length);
    TrackObservation obs;
    obs.frame = t;
    obs.proposal = Proposal{visible, indices, Eigen::Vector3d::Zero(), 0.0};
    obs.filtered_center = visible.center();
    out.track.observations.push_back(obs);
    out.frames.push_back(std::move(pts));
  }
  return out;
}

}  // namespace

TEST_CASE("register_track") {
  Rng rng(82);
  RegistrationParams params;
  params.dt = 0.1;

  SUBCASE("identical static point sets register to identity") {
    const Box7 shape{0, 0, 1, 3, 1.5, 1.2, 0.3};
    const PointCloud pts = testutil::cloud_in_box(rng, shape, 150);
    std::vector<PointCloud> frames = {pts, pts, pts};
    Track track;
    std::vector<int> indices(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) indices[i] = static_cast<int>(i);
    for (int t = 0; t < 3; ++t) {
      track.observations.push_back(
          {t, Proposal{shape, indices, Eigen::Vector3d::Zero(), 0.0}, shape.center()});
    }
    const RegisteredShape shape_out = register_track(track, frames, params);
    REQUIRE(shape_out.per_frame_transforms.size() == 3);
    for (const Pose& pose : shape_out.per_frame_transforms) {
      CHECK(pose.translation.norm() < 1e-9);
      CHECK((pose.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    }
    CHECK(shape_out.offsets.back() == static_cast<int>(3 * pts.size()));
  }

  SUBCASE("per-frame translation is recovered against the generator motion") {
    const Box7 shape{0, 0, 1, 3, 1.5, 1.2, 0};
    const PointCloud base = testutil::cloud_in_box(rng, shape, 200);
    const Eigen::Vector3d step(0.5, 0.2, 0);
    std::vector<PointCloud> frames;
    Track track;
    std::vector<int> indices(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) indices[i] = static_cast<int>(i);
    for (int t = 0; t < 5; ++t) {
      PointCloud pts = base;
      for (Point3& p : pts) p += t * step;
      Box7 box = shape;
      box.cx += t * step.x();
      box.cy += t * step.y();
      track.observations.push_back(
          {t, Proposal{box, indices, step / 0.1, 0.0}, box.center()});
      frames.push_back(std::move(pts));
    }
    const RegisteredShape out = register_track(track, frames, params);
    for (int t = 0; t < 5; ++t) {
      const Eigen::Vector3d expected = -t * step;  // maps frame t back to frame 0
      CHECK((out.per_frame_transforms[t].translation - expected).norm() < 1e-3);
      CHECK(out.converged[t] == 1);
    }
  }

  SUBCASE("noisy clouds register within the loose tolerance") {
    const Box7 shape{0, 0, 1, 3.5, 1.8, 1.4, 0};
    const PointCloud base = testutil::cloud_in_box(rng, shape, 300);
    const Eigen::Vector3d step(0.4, -0.1, 0);
    std::vector<PointCloud> frames;
    Track track;
    std::vector<int> indices(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) indices[i] = static_cast<int>(i);
    for (int t = 0; t < 4; ++t) {
      PointCloud pts = base;
      for (Point3& p : pts) {
        p += t * step + 0.01 * Point3(rng.normal(), rng.normal(), rng.normal());
      }
      Box7 box = shape;
      box.cx += t * step.x();
      box.cy += t * step.y();
      track.observations.push_back(
          {t, Proposal{box, indices, step / 0.1, 0.0}, box.center()});
      frames.push_back(std::move(pts));
    }
    const RegisteredShape out = register_track(track, frames, params);
    for (int t = 0; t < 4; ++t) {
      CHECK((out.per_frame_transforms[t].translation - (-t * step)).norm() < 0.02);
      const double yaw = std::abs(out.per_frame_transforms[t].yaw());
      CHECK(yaw < 0.5 * kPi / 180.0);
    }
  }

  SUBCASE("round trip: transforms reproduce the aggregate partition exactly") {
    SlidingTrack sliding = make_sliding_track(rng, 8, 2.2);
    const RegisteredShape out = register_track(sliding.track, sliding.frames, params);
    REQUIRE(out.offsets.size() == sliding.frames.size() + 1);

    for (std::size_t k = 0; k < out.per_frame_transforms.size(); ++k) {
      const Pose& transform = out.per_frame_transforms[k];
      const PointCloud& frame = sliding.frames[k];
      const std::vector<int>& indices =
          sliding.track.observations[k].proposal.point_indices;
      REQUIRE(out.offsets[k + 1] - out.offsets[k] == static_cast<int>(indices.size()));
      for (std::size_t i = 0; i < indices.size(); ++i) {
        const Point3 mapped = transform.apply(frame[indices[i]]);
        CHECK((mapped - out.aggregated_points[out.offsets[k] + i]).norm() == 0.0);
      }
      // The recorded transform is a fixed point of another registration pass
      // against the finished aggregate.
      const IcpResult refined = icp_point_to_point(
          [&] {
            PointCloud pts;
            for (int idx : indices) pts.push_back(frame[idx]);
            return pts;
          }(),
          SpatialIndex(out.aggregated_points), params.icp, transform);
      const Pose delta = refined.transform.compose(transform.inverse());
      CHECK(delta.translation.norm() < 1e-6);
      CHECK((delta.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("amodalize") {
  Rng rng(83);
  RegistrationParams reg_params;
  reg_params.dt = 0.1;
  AmodalParams params;
  params.eps_sf = 1.0;

  SUBCASE("single-frame track keeps its visible box") {
    const Box7 visible{1, 2, 0.5, 2.2, 1.1, 1.0, 0.3};
    Track track;
    track.id = 7;
    PointCloud pts = testutil::cloud_in_box(rng, visible, 60);
    std::vector<int> indices(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) indices[i] = static_cast<int>(i);
    track.observations.push_back(
        {3, Proposal{visible, indices, Eigen::Vector3d::Zero(), 0.0}, visible.center()});
    const RegisteredShape shape = register_track(track, {PointCloud{}, {}, {}, pts}, reg_params);
    const std::vector<LabeledBox> out = amodalize(track, shape, {0, 0, 0, 0}, params);
    REQUIRE(out.size() == 1);
    CHECK(out[0].frame == 3);
    CHECK(out[0].track_id == 7);
    CHECK(out[0].box.length == doctest::Approx(visible.length));
    CHECK(out[0].box.cx == doctest::Approx(visible.cx));
  }

  SUBCASE("partial views aggregate to the full length") {
    SlidingTrack sliding = make_sliding_track(rng, 10, 2.2);
    REQUIRE(sliding.max_visible_length <= 0.6 * sliding.true_box.length);

    const RegisteredShape shape = register_track(sliding.track, sliding.frames, reg_params);
    const std::vector<LabeledBox> out =
        amodalize(sliding.track, shape, std::vector<double>(10, 0.0), params);
    REQUIRE(out.size() == 10);
    for (const LabeledBox& label : out) {
      CHECK(std::abs(label.box.length - sliding.true_box.length) <
            0.1 * sliding.true_box.length);
      // Every frame shares the amodal dims.
      CHECK(label.box.length == doctest::Approx(out[0].box.length));
      CHECK(label.box.width == doctest::Approx(out[0].box.width));
      CHECK(label.box.height == doctest::Approx(out[0].box.height));
    }
    // Visible boxes underestimate by at least 40%.
    CHECK(sliding.max_visible_length < 0.6 * sliding.true_box.length);
  }

  SUBCASE("static fully visible object: amodal matches the per-frame fit") {
    const Box7 shape_box{2, -1, 1, 3.2, 1.6, 1.3, 0};
    const PointCloud pts = testutil::cloud_in_box(rng, shape_box, 250);
    std::vector<PointCloud> frames = {pts, pts, pts, pts};
    Track track;
    std::vector<int> indices(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) indices[i] = static_cast<int>(i);
    const Box7 visible = fit_tightest_box(pts, 0.0);
    for (int t = 0; t < 4; ++t) {
      track.observations.push_back(
          {t, Proposal{visible, indices, Eigen::Vector3d::Zero(), 0.0}, visible.center()});
    }
    const RegisteredShape shape = register_track(track, frames, reg_params);
    const std::vector<LabeledBox> out =
        amodalize(track, shape, std::vector<double>(4, 0.0), params);
    REQUIRE(out.size() == 4);
    for (const LabeledBox& label : out) {
      CHECK(std::abs(label.box.length - visible.length) < 0.05 * visible.length);
      CHECK(std::abs(label.box.width - visible.width) < 0.05 * visible.width);
      CHECK(std::abs(label.box.height - visible.height) < 0.05 * visible.height);
    }
  }
}

TEST_CASE("cleanup_labels") {
  CleanupParams params;

  SUBCASE("coincident boxes collapse to the top score") {
    std::vector<LabeledBox> boxes = {
        {{0, 0, 0, 2, 1, 1, 0}, 0, 0, 0.9, -1},
        {{0, 0, 0, 2, 1, 1, 0}, 1, 0, 0.5, -1},
    };
    const std::vector<LabeledBox> out = cleanup_labels(boxes, params);
    REQUIRE(out.size() == 1);
    CHECK(out[0].score == doctest::Approx(0.9));
  }

  SUBCASE("tiny and oversized boxes are dropped") {
    std::vector<LabeledBox> boxes = {
        {{0, 0, 0, 0.01, 0.01, 0.01, 0}, 0, 0, 0.9, -1},
        {{5, 0, 0, 30, 4, 2, 0}, 1, 0, 0.9, -1},
        {{10, 0, 0, 2, 1, 1, 0}, 2, 0, 0.9, -1},
    };
    const std::vector<LabeledBox> out = cleanup_labels(boxes, params);
    REQUIRE(out.size() == 1);
    CHECK(out[0].track_id == 2);
  }

  SUBCASE("output has pairwise per-frame IoU below the threshold") {
    Rng rng(84);
    std::vector<LabeledBox> boxes;
    for (int i = 0; i < 30; ++i) {
      LabeledBox label;
      label.box = testutil::random_box(rng, 4.0);
      label.box.height = std::max(label.box.height, 0.2);
      label.frame = static_cast<int>(rng.uniform_index(3));
      label.score = rng.uniform();
      label.track_id = i;
      boxes.push_back(label);
    }
    const std::vector<LabeledBox> out = cleanup_labels(boxes, params);
    for (std::size_t i = 0; i < out.size(); ++i) {
      for (std::size_t j = i + 1; j < out.size(); ++j) {
        if (out[i].frame != out[j].frame) continue;
        CHECK(iou_bev(out[i].box, out[j].box) < params.nms_iou);
      }
    }
  }
}
