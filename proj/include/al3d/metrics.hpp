#pragma once

#include "al3d/geometry.hpp"

#include <optional>

namespace al3d {

/// Class-agnostic evaluation uses this in place of a category index.
constexpr int kAnyCategory = -1;

struct Detection {
  Box7 box;
  double score = 0.0;
  int category = kAnyCategory;
  int frame = 0;
};

struct GroundTruthBox {
  Box7 box;
  int category = kAnyCategory;
  int frame = 0;
  int track_id = 0;
};

/// Axis-aligned BEV rectangle, membership by box center.
struct BevRegion {
  double cx = 0, cy = 0;
  double half_x = 50.0, half_y = 20.0;

  bool contains(double x, double y) const {
    return std::abs(x - cx) <= half_x && std::abs(y - cy) <= half_y;
  }
};

/// Score-descending greedy matching, one detection per ground-truth box,
/// true positive iff iou_3d reaches the threshold, frames matched
/// independently. AP is the exact area under the raw precision/recall step
/// curve (sum of precision at each true positive over the GT count).
double average_precision(const std::vector<Detection>& detections,
                         const std::vector<GroundTruthBox>& ground_truth,
                         double iou_threshold,
                         const std::optional<BevRegion>& region = std::nullopt);

double mean_ap(const std::vector<double>& per_category_ap);

struct TrackedBox {
  Box7 box;
  int track_id = 0;
  int frame = 0;
  int category = kAnyCategory;
};

struct MotResult {
  double mota = 0.0;  // percent, <= 100
  double motp = 0.0;  // mean (1 - IoU) over matches, percent, lower is better
  int misses = 0;
  int false_positives = 0;
  int id_switches = 0;
  int matches = 0;
  int total_gt = 0;
};

/// CLEAR-MOT bookkeeping: previous-frame matches persist while still above
/// the threshold, the remainder is matched by minimal cost (1 - IoU), and a
/// ground-truth object re-associating to a new hypothesis counts one switch.
MotResult clear_mot(const std::vector<TrackedBox>& hypotheses,
                    const std::vector<TrackedBox>& ground_truth, double match_iou);

struct FpTaxonomy {
  int localization = 0;
  int confusion_other = 0;
  int confusion_background = 0;
  int analyzed_false_positives = 0;

  int total() const { return localization + confusion_other + confusion_background; }
};

/// Supplementary-style false-positive taxonomy over the top-N detections per
/// category, N = ceil(gt_count / 2). A false positive with same-category IoU
/// strictly inside (0.1, base_iou) is a localization error; otherwise IoU of
/// at least 0.1 with another category's box means confusion with that object;
/// the rest is background confusion.
FpTaxonomy fp_breakdown(const std::vector<Detection>& detections,
                        const std::vector<GroundTruthBox>& ground_truth,
                        double base_iou = 0.4);

}  // namespace al3d
