#pragma once

#include "al3d/icp.hpp"
#include "al3d/proposals.hpp"

#include <string>

namespace al3d {

struct KalmanParams {
  double process_noise = 1.0;       // white-acceleration sigma, m/s^2
  double measurement_noise = 0.1;   // center measurement sigma, meters
  double initial_position_var = 0.25;
  double initial_velocity_var = 4.0;
};

/// Constant-velocity state: (x, y, z, vx, vy, vz).
struct KalmanState {
  Eigen::Matrix<double, 6, 1> mean = Eigen::Matrix<double, 6, 1>::Zero();
  Eigen::Matrix<double, 6, 6> covariance = Eigen::Matrix<double, 6, 6>::Identity();

  Eigen::Vector3d position() const { return mean.head<3>(); }
  Eigen::Vector3d velocity() const { return mean.tail<3>(); }
};

KalmanState kf_init(const Eigen::Vector3d& position, const Eigen::Vector3d& velocity,
                    const KalmanParams& params);

/// Constant-velocity prediction with white-acceleration process noise.
/// Throws when the covariance is not symmetric PSD.
KalmanState kf_predict(const KalmanState& state, double dt, double process_noise);

/// Measurement update on the 3D center; Joseph-form covariance update.
/// `measurement_noise` is the per-axis sigma and may be zero.
KalmanState kf_update(const KalmanState& state, const Eigen::Vector3d& measured_center,
                      double measurement_noise);

struct TrackObservation {
  int frame = 0;
  Proposal proposal;
  Eigen::Vector3d filtered_center = Eigen::Vector3d::Zero();  // posterior position
};

struct Track {
  int id = 0;
  std::vector<TrackObservation> observations;  // strictly increasing frames
  KalmanState state;
  int misses = 0;

  int length() const { return static_cast<int>(observations.size()); }
};

struct TrackingParams {
  double association_gate = 3.0;  // BEV center distance, meters
  int max_misses = 2;
  double dt = 0.1;
  KalmanParams kf;
};

/// Tracking by detection: predict, gate, min-cost bipartite matching on BEV
/// center distance, update; unmatched proposals open tracks, tracks coast up
/// to max_misses frames. Frame f proposals are per_frame[f].
std::vector<Track> track_proposals(const std::vector<std::vector<Proposal>>& per_frame,
                                   const TrackingParams& params);

/// Min-cost assignment (rows to columns). Entries above `forbidden_above`
/// are never matched. Returns, per row, the matched column or -1.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost, double forbidden_above);

/// Point aggregate of a track in the frame of its first observation.
struct RegisteredShape {
  PointCloud aggregated_points;
  std::vector<Pose> per_frame_transforms;  // frame points -> canonical frame
  std::vector<int> offsets;                // aggregated range start per observation
  std::vector<std::uint8_t> converged;     // 0 = best-effort (registration failed)
};

struct RegistrationParams {
  double dt = 0.1;            // frame period, for flow integration
  double residual_cap = 0.5;  // mean ICP residual above this = failed
  IcpParams icp;
};

/// Registers each observation's member points to the growing aggregate,
/// initialized from the integrated per-observation scene flow (the object
/// motion estimate). `frame_points` holds, per frame index, the cloud the
/// proposals index into.
RegisteredShape register_track(const Track& track,
                               const std::vector<PointCloud>& frame_points,
                               const RegistrationParams& params = {});

/// Full-extent box for one frame of one track.
struct LabeledBox {
  Box7 box;
  int track_id = 0;
  int frame = 0;
  double score = 0.0;
  int category = kUnassignedCategory;
};

struct AmodalParams {
  double eps_sf = 1.0;            // moving/static heading rule threshold
  double min_box_extent = 0.05;
  double score_length_norm = 10.0;   // track length saturating the score
  double score_support_norm = 50.0;  // aggregated points saturating the score
};

/// Fits one box over the aggregated points and maps it back through each
/// observation's inverse transform: every frame gets the same dims. Score is
/// min(1, length/10) * min(1, support/50). Single-observation tracks keep
/// their visible proposal box unchanged.
std::vector<LabeledBox> amodalize(const Track& track, const RegisteredShape& shape,
                                  const std::vector<double>& ego_headings,
                                  const AmodalParams& params);

struct CleanupParams {
  double min_dim = 0.1;            // drop boxes with any smaller dimension
  double max_bev_diagonal = 20.0;  // drop oversized boxes
  double nms_iou = 0.2;
  IouKind nms_kind = IouKind::Bev;
};

/// Per-frame size filter followed by score-ranked NMS.
std::vector<LabeledBox> cleanup_labels(const std::vector<LabeledBox>& boxes,
                                       const CleanupParams& params);

}  // namespace al3d
