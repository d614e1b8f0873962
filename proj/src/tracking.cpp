#include "al3d/tracking.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <map>
#include <stdexcept>

namespace al3d {

namespace {

void require_psd(const Eigen::Matrix<double, 6, 6>& cov, const char* where) {
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw std::invalid_argument(std::string(where) + ": covariance not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> solver(cov);
  if (solver.eigenvalues().minCoeff() < -1e-9) {
    throw std::invalid_argument(std::string(where) + ": covariance not PSD");
  }
}

Eigen::Matrix<double, 6, 6> symmetrized(const Eigen::Matrix<double, 6, 6>& m) {
  return (m + m.transpose()) / 2.0;
}

}  // namespace

KalmanState kf_init(const Eigen::Vector3d& position, const Eigen::Vector3d& velocity,
                    const KalmanParams& params) {
  KalmanState state;
  state.mean.head<3>() = position;
  state.mean.tail<3>() = velocity;
  state.covariance.setZero();
  state.covariance.topLeftCorner<3, 3>() =
      Eigen::Matrix3d::Identity() * params.initial_position_var;
  state.covariance.bottomRightCorner<3, 3>() =
      Eigen::Matrix3d::Identity() * params.initial_velocity_var;
  return state;
}

KalmanState kf_predict(const KalmanState& state, double dt, double process_noise) {
  if (!(dt > 0)) throw std::invalid_argument("kf_predict: dt must be positive");
  require_psd(state.covariance, "kf_predict");

  Eigen::Matrix<double, 6, 6> f = Eigen::Matrix<double, 6, 6>::Identity();
  f.topRightCorner<3, 3>() = Eigen::Matrix3d::Identity() * dt;

  const double q2 = process_noise * process_noise;
  Eigen::Matrix<double, 6, 6> q = Eigen::Matrix<double, 6, 6>::Zero();
  q.topLeftCorner<3, 3>() = Eigen::Matrix3d::Identity() * (q2 * dt * dt * dt * dt / 4.0);
  q.topRightCorner<3, 3>() = Eigen::Matrix3d::Identity() * (q2 * dt * dt * dt / 2.0);
  q.bottomLeftCorner<3, 3>() = q.topRightCorner<3, 3>();
  q.bottomRightCorner<3, 3>() = Eigen::Matrix3d::Identity() * (q2 * dt * dt);

  KalmanState out;
  out.mean = f * state.mean;
  out.covariance = symmetrized(f * state.covariance * f.transpose() + q);
  return out;
}

KalmanState kf_update(const KalmanState& state, const Eigen::Vector3d& measured_center,
                      double measurement_noise) {
  require_psd(state.covariance, "kf_update");
  Eigen::Matrix<double, 3, 6> h = Eigen::Matrix<double, 3, 6>::Zero();
  h.leftCols<3>() = Eigen::Matrix3d::Identity();

  const Eigen::Matrix3d r =
      Eigen::Matrix3d::Identity() * (measurement_noise * measurement_noise);
  const Eigen::Matrix3d s = h * state.covariance * h.transpose() + r;
  const Eigen::Matrix<double, 6, 3> gain =
      state.covariance * h.transpose() * s.inverse();

  KalmanState out;
  out.mean = state.mean + gain * (measured_center - h * state.mean);
  const Eigen::Matrix<double, 6, 6> ikh =
      Eigen::Matrix<double, 6, 6>::Identity() - gain * h;
  out.covariance = symmetrized(ikh * state.covariance * ikh.transpose() +
                               gain * r * gain.transpose());
  return out;
}

// Square-matrix Hungarian (potentials formulation), O(n^3).
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost, double forbidden_above) {
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  if (rows == 0 || cols == 0) return std::vector<int>(rows, -1);

  const int n = std::max(rows, cols);
  const double big = 1e12;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i < rows && j < cols) {
        a(i, j) = cost(i, j) > forbidden_above ? big : cost(i, j);
      } else {
        a(i, j) = forbidden_above;  // staying unmatched costs the gate
      }
    }
  }

  std::vector<double> u(n + 1, 0), v(n + 1, 0);
  std::vector<int> match(n + 1, 0);  // column -> row (1-based)
  std::vector<int> way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = std::numeric_limits<double>::infinity();
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> row_to_col(rows, -1);
  for (int j = 1; j <= n; ++j) {
    const int i = match[j] - 1;
    if (i >= 0 && i < rows && j - 1 < cols && cost(i, j - 1) <= forbidden_above) {
      row_to_col[i] = j - 1;
    }
  }
  return row_to_col;
}

std::vector<Track> track_proposals(const std::vector<std::vector<Proposal>>& per_frame,
                                   const TrackingParams& params) {
  std::vector<Track> finished;
  std::vector<Track> live;
  int next_id = 0;

  for (std::size_t frame = 0; frame < per_frame.size(); ++frame) {
    const std::vector<Proposal>& proposals = per_frame[frame];

    for (Track& track : live) {
      track.state = kf_predict(track.state, params.dt, params.kf.process_noise);
    }

    std::vector<int> assignment(live.size(), -1);
    if (!live.empty() && !proposals.empty()) {
      Eigen::MatrixXd cost(live.size(), proposals.size());
      for (std::size_t t = 0; t < live.size(); ++t) {
        const Eigen::Vector3d predicted = live[t].state.position();
        for (std::size_t p = 0; p < proposals.size(); ++p) {
          const Box7& box = proposals[p].box;
          cost(t, p) = std::hypot(predicted.x() - box.cx, predicted.y() - box.cy);
        }
      }
      assignment = solve_assignment(cost, params.association_gate);
    }

    std::vector<char> claimed(proposals.size(), 0);
    std::vector<Track> still_live;
    for (std::size_t t = 0; t < live.size(); ++t) {
      Track track = std::move(live[t]);
      const int p = assignment[t];
      if (p >= 0) {
        claimed[p] = 1;
        track.state = kf_update(track.state, proposals[p].box.center(),
                                params.kf.measurement_noise);
        track.misses = 0;
        track.observations.push_back(
            {static_cast<int>(frame), proposals[p], track.state.position()});
        still_live.push_back(std::move(track));
      } else {
        track.misses += 1;
        if (track.misses > params.max_misses) {
          finished.push_back(std::move(track));
        } else {
          still_live.push_back(std::move(track));
        }
      }
    }
    live.swap(still_live);

    for (std::size_t p = 0; p < proposals.size(); ++p) {
      if (claimed[p]) continue;
      Track track;
      track.id = next_id++;
      track.state =
          kf_init(proposals[p].box.center(), proposals[p].mean_flow, params.kf);
      track.observations.push_back(
          {static_cast<int>(frame), proposals[p], track.state.position()});
      live.push_back(std::move(track));
    }
  }

  for (Track& track : live) finished.push_back(std::move(track));
  std::sort(finished.begin(), finished.end(),
            [](const Track& a, const Track& b) { return a.id < b.id; });
  return finished;
}

RegisteredShape register_track(const Track& track,
                               const std::vector<PointCloud>& frame_points,
                               const RegistrationParams& params) {
  if (track.observations.empty()) {
    throw std::invalid_argument("register_track: empty track");
  }
  const double frame_dt = params.dt;
  auto member_points = [&](const TrackObservation& obs) {
    const PointCloud& cloud = frame_points.at(obs.frame);
    PointCloud pts;
    pts.reserve(obs.proposal.point_indices.size());
    for (int idx : obs.proposal.point_indices) pts.push_back(cloud.at(idx));
    return pts;
  };

  RegisteredShape shape;
  shape.offsets.push_back(0);
  const PointCloud first = member_points(track.observations[0]);
  shape.aggregated_points = first;
  shape.per_frame_transforms.push_back(Pose::identity());
  shape.converged.push_back(1);
  shape.offsets.push_back(static_cast<int>(shape.aggregated_points.size()));

  // Integrated scene flow approximates the object displacement since the
  // canonical observation. Filtered box centers are not usable here: on a
  // partially visible static object they drift with the viewing window.
  Eigen::Vector3d displacement = Eigen::Vector3d::Zero();
  for (std::size_t k = 1; k < track.observations.size(); ++k) {
    const TrackObservation& prev = track.observations[k - 1];
    const TrackObservation& obs = track.observations[k];
    const double gap = (obs.frame - prev.frame) * frame_dt;
    displacement += 0.5 * gap * (prev.proposal.mean_flow + obs.proposal.mean_flow);
    const PointCloud pts = member_points(obs);

    Pose init = Pose::identity();
    init.translation = -displacement;

    const SpatialIndex aggregate_index(shape.aggregated_points);
    const IcpResult result = icp_point_to_point(pts, aggregate_index, params.icp, init);
    const bool ok = result.converged && result.mean_residual <= params.residual_cap;

    const Pose transform = ok ? result.transform : init;
    shape.converged.push_back(ok ? 1 : 0);
    shape.per_frame_transforms.push_back(transform);
    for (const Point3& p : pts) {
      shape.aggregated_points.push_back(transform.apply(p));
    }
    shape.offsets.push_back(static_cast<int>(shape.aggregated_points.size()));
  }
  return shape;
}

std::vector<LabeledBox> amodalize(const Track& track, const RegisteredShape& shape,
                                  const std::vector<double>& ego_headings,
                                  const AmodalParams& params) {
  if (track.observations.empty()) return {};
  const double score =
      std::min(1.0, track.length() / params.score_length_norm) *
      std::min(1.0, static_cast<double>(shape.aggregated_points.size()) /
                        params.score_support_norm);

  std::vector<LabeledBox> out;
  if (track.observations.size() == 1) {
    // Nothing to aggregate: the visible proposal is the label.
    const TrackObservation& obs = track.observations[0];
    out.push_back({obs.proposal.box, track.id, obs.frame, score, kUnassignedCategory});
    return out;
  }

  Eigen::Vector3d mean_flow = Eigen::Vector3d::Zero();
  for (const TrackObservation& obs : track.observations) {
    mean_flow += obs.proposal.mean_flow;
  }
  mean_flow /= static_cast<double>(track.observations.size());

  const int first_frame = track.observations[0].frame;
  const double ego_heading =
      first_frame < static_cast<int>(ego_headings.size()) ? ego_headings[first_frame] : 0.0;

  const Box7 free_fit =
      fit_tightest_box(shape.aggregated_points, std::nullopt, params.min_box_extent);
  const double heading =
      assign_heading(mean_flow, free_fit.heading, ego_heading, params.eps_sf);
  const Box7 canonical =
      fit_tightest_box(shape.aggregated_points, heading, params.min_box_extent);

  for (std::size_t k = 0; k < track.observations.size(); ++k) {
    const TrackObservation& obs = track.observations[k];
    const Box7 frame_box = transform_box(canonical, shape.per_frame_transforms[k].inverse());
    out.push_back({frame_box, track.id, obs.frame, score, kUnassignedCategory});
  }
  return out;
}

std::vector<LabeledBox> cleanup_labels(const std::vector<LabeledBox>& boxes,
                                       const CleanupParams& params) {
  std::map<int, std::vector<int>> by_frame;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const Box7& b = boxes[i].box;
    if (b.min_dim() < params.min_dim) continue;
    if (b.bev_diagonal() > params.max_bev_diagonal) continue;
    by_frame[boxes[i].frame].push_back(static_cast<int>(i));
  }

  std::vector<LabeledBox> out;
  for (const auto& [frame, indices] : by_frame) {
    std::vector<Box7> frame_boxes;
    std::vector<double> scores;
    for (int i : indices) {
      frame_boxes.push_back(boxes[i].box);
      scores.push_back(boxes[i].score);
    }
    for (int kept : nms(frame_boxes, scores, params.nms_iou, params.nms_kind)) {
      out.push_back(boxes[indices[kept]]);
    }
  }
  return out;
}

}  // namespace al3d
