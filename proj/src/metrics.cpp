#include "al3d/metrics.hpp"

#include "al3d/tracking.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

namespace al3d {

namespace {

std::vector<int> score_order(const std::vector<Detection>& dets) {
  std::vector<int> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
    return a < b;
  });
  return order;
}

// Greedy matching result: per detection (in score order), TP flag.
std::vector<char> greedy_match(const std::vector<Detection>& dets,
                               const std::vector<int>& order,
                               const std::vector<GroundTruthBox>& gts,
                               double iou_threshold) {
  std::map<int, std::vector<int>> gt_by_frame;
  for (std::size_t g = 0; g < gts.size(); ++g) gt_by_frame[gts[g].frame].push_back(static_cast<int>(g));

  std::vector<char> gt_taken(gts.size(), 0);
  std::vector<char> tp(dets.size(), 0);
  for (int d : order) {
    const auto it = gt_by_frame.find(dets[d].frame);
    if (it == gt_by_frame.end()) continue;
    int best_gt = -1;
    double best_iou = 0.0;
    for (int g : it->second) {
      if (gt_taken[g]) continue;
      const double iou = iou_3d(dets[d].box, gts[g].box);
      if (iou > best_iou) {
        best_iou = iou;
        best_gt = g;
      }
    }
    if (best_gt >= 0 && best_iou >= iou_threshold) {
      gt_taken[best_gt] = 1;
      tp[d] = 1;
    }
  }
  return tp;
}

}  // namespace

double average_precision(const std::vector<Detection>& detections,
                         const std::vector<GroundTruthBox>& ground_truth,
                         double iou_threshold, const std::optional<BevRegion>& region) {
  std::vector<Detection> dets;
  std::vector<GroundTruthBox> gts;
  if (region) {
    for (const Detection& d : detections) {
      if (region->contains(d.box.cx, d.box.cy)) dets.push_back(d);
    }
    for (const GroundTruthBox& g : ground_truth) {
      if (region->contains(g.box.cx, g.box.cy)) gts.push_back(g);
    }
  } else {
    dets = detections;
    gts = ground_truth;
  }
  if (gts.empty()) return dets.empty() ? 1.0 : 0.0;
  if (dets.empty()) return 0.0;

  const std::vector<int> order = score_order(dets);
  const std::vector<char> tp = greedy_match(dets, order, gts, iou_threshold);

  // Area under the raw PR steps: precision at each recall increment.
  double ap = 0.0;
  int tps = 0, fps = 0;
  for (int d : order) {
    if (tp[d]) {
      ++tps;
      ap += static_cast<double>(tps) / (tps + fps);
    } else {
      ++fps;
    }
  }
  return ap / static_cast<double>(gts.size());
}

double mean_ap(const std::vector<double>& per_category_ap) {
  if (per_category_ap.empty()) {
    throw std::invalid_argument("mean_ap: empty input");
  }
  return std::accumulate(per_category_ap.begin(), per_category_ap.end(), 0.0) /
         static_cast<double>(per_category_ap.size());
}

MotResult clear_mot(const std::vector<TrackedBox>& hypotheses,
                    const std::vector<TrackedBox>& ground_truth, double match_iou) {
  std::map<int, std::vector<int>> hyp_by_frame, gt_by_frame;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    hyp_by_frame[hypotheses[i].frame].push_back(static_cast<int>(i));
  }
  std::set<int> frames;
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    gt_by_frame[ground_truth[i].frame].push_back(static_cast<int>(i));
    frames.insert(ground_truth[i].frame);
  }
  for (const auto& [frame, _] : hyp_by_frame) frames.insert(frame);

  MotResult result;
  result.total_gt = static_cast<int>(ground_truth.size());
  double dissimilarity_sum = 0.0;

  std::map<int, int> active;      // gt track id -> hyp track id (current frame pairing)
  std::map<int, int> last_known;  // gt track id -> last associated hyp id (persists)

  for (int frame : frames) {
    std::vector<int> gt_idx = gt_by_frame.count(frame) ? gt_by_frame[frame] : std::vector<int>{};
    std::vector<int> hyp_idx =
        hyp_by_frame.count(frame) ? hyp_by_frame[frame] : std::vector<int>{};

    std::map<int, int> gt_pos, hyp_pos;  // track id -> index within the frame
    for (int g : gt_idx) gt_pos[ground_truth[g].track_id] = g;
    for (int h : hyp_idx) hyp_pos[hypotheses[h].track_id] = h;

    std::map<int, int> matches;  // gt index -> hyp index
    std::set<int> used_gt, used_hyp;

    // Keep still-valid pairings from the previous frame.
    for (const auto& [gt_id, hyp_id] : active) {
      auto g = gt_pos.find(gt_id);
      auto h = hyp_pos.find(hyp_id);
      if (g == gt_pos.end() || h == hyp_pos.end()) continue;
      const double iou = iou_3d(ground_truth[g->second].box, hypotheses[h->second].box);
      if (iou >= match_iou) {
        matches[g->second] = h->second;
        used_gt.insert(g->second);
        used_hyp.insert(h->second);
        dissimilarity_sum += 1.0 - iou;
      }
    }

    // Minimal-cost matching on the remainder.
    std::vector<int> free_gt, free_hyp;
    for (int g : gt_idx) {
      if (!used_gt.count(g)) free_gt.push_back(g);
    }
    for (int h : hyp_idx) {
      if (!used_hyp.count(h)) free_hyp.push_back(h);
    }
    if (!free_gt.empty() && !free_hyp.empty()) {
      Eigen::MatrixXd cost(free_gt.size(), free_hyp.size());
      for (std::size_t i = 0; i < free_gt.size(); ++i) {
        for (std::size_t j = 0; j < free_hyp.size(); ++j) {
          const double iou = iou_3d(ground_truth[free_gt[i]].box, hypotheses[free_hyp[j]].box);
          cost(i, j) = iou >= match_iou ? 1.0 - iou : 2.0;
        }
      }
      const std::vector<int> assignment = solve_assignment(cost, 1.0);
      for (std::size_t i = 0; i < free_gt.size(); ++i) {
        if (assignment[i] < 0) continue;
        const int g = free_gt[i];
        const int h = free_hyp[assignment[i]];
        matches[g] = h;
        used_gt.insert(g);
        used_hyp.insert(h);
        dissimilarity_sum += cost(i, assignment[i]);
      }
    }

    std::map<int, int> next_active;
    for (const auto& [g, h] : matches) {
      const int gt_id = ground_truth[g].track_id;
      const int hyp_id = hypotheses[h].track_id;
      auto known = last_known.find(gt_id);
      if (known != last_known.end() && known->second != hyp_id) {
        result.id_switches += 1;
      }
      last_known[gt_id] = hyp_id;
      next_active[gt_id] = hyp_id;
      result.matches += 1;
    }
    active.swap(next_active);

    result.misses += static_cast<int>(gt_idx.size()) - static_cast<int>(matches.size());
    result.false_positives +=
        static_cast<int>(hyp_idx.size()) - static_cast<int>(matches.size());
  }

  if (result.total_gt > 0) {
    result.mota =
        100.0 * (1.0 - static_cast<double>(result.misses + result.false_positives +
                                           result.id_switches) /
                           result.total_gt);
  } else {
    result.mota = result.false_positives == 0 ? 100.0 : 0.0;
  }
  result.motp = result.matches > 0 ? 100.0 * dissimilarity_sum / result.matches : 0.0;
  return result;
}

FpTaxonomy fp_breakdown(const std::vector<Detection>& detections,
                        const std::vector<GroundTruthBox>& ground_truth, double base_iou) {
  FpTaxonomy taxonomy;

  std::set<int> categories;
  for (const GroundTruthBox& g : ground_truth) categories.insert(g.category);

  for (int category : categories) {
    std::vector<Detection> dets;
    std::vector<GroundTruthBox> gts;
    for (const Detection& d : detections) {
      if (d.category == category) dets.push_back(d);
    }
    for (const GroundTruthBox& g : ground_truth) {
      if (g.category == category) gts.push_back(g);
    }
    if (gts.empty()) continue;
    const int top_n = static_cast<int>((gts.size() + 1) / 2);

    std::vector<int> order = score_order(dets);
    if (static_cast<int>(order.size()) > top_n) order.resize(top_n);
    const std::vector<char> tp = greedy_match(dets, order, gts, base_iou);

    for (int d : order) {
      if (tp[d]) continue;
      taxonomy.analyzed_false_positives += 1;

      double best_same = 0.0, best_other = 0.0;
      for (const GroundTruthBox& g : ground_truth) {
        if (g.frame != dets[d].frame) continue;
        const double iou = iou_3d(dets[d].box, g.box);
        if (g.category == category) {
          best_same = std::max(best_same, iou);
        } else {
          best_other = std::max(best_other, iou);
        }
      }
      if (best_same > 0.1 && best_same < base_iou) {
        taxonomy.localization += 1;
      } else if (best_other >= 0.1) {
        taxonomy.confusion_other += 1;
      } else {
        taxonomy.confusion_background += 1;
      }
    }
  }
  return taxonomy;
}

}  // namespace al3d
