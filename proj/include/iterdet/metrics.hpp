#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "iterdet/geometry.hpp"
#include "iterdet/synthetic.hpp"

namespace iterdet {

// Detections plus ground truth for one image. Detection boxes are clipped
// to the image during matching; ground truth is not.
struct EvalSample {
  std::vector<ScoredBox> detections;
  std::vector<BBox> ground_truth;
  int width = 0;
  int height = 0;
};

// Per-detection match labels in descending-score order.
// order[r] is the original index of the r-th ranked detection.
struct MatchResult {
  std::vector<std::size_t> order;
  std::vector<char> is_tp;
};

// Greedy matching: detections in descending score order (ties to the
// lower original index), each takes the unmatched ground-truth box of
// highest IoU when that IoU reaches the threshold. Each GT matches once.
MatchResult match_detections(const EvalSample& sample,
                             double iou_threshold = 0.5);

// Area under the pooled precision-recall curve (all-point envelope
// interpolation), percent. Throws when there is no ground truth.
double average_precision(const std::vector<EvalSample>& samples,
                         double iou_threshold = 0.5);

// TP count at the operating threshold over total GT, percent.
double recall_at(const std::vector<EvalSample>& samples,
                 double score_threshold, double iou_threshold = 0.5);

// Log-average miss rate over the 9 FPPI targets 10^(-2 + k/4), k = 0..8,
// percent. Miss rates are floored at 1e-5 before the log.
double mmr(const std::vector<EvalSample>& samples, double iou_threshold = 0.5);

struct CrowdingStats {
  double objects_per_image = 0.0;
  std::vector<double> thresholds;
  std::vector<double> pairs_per_image;  // aligned with thresholds
};

CrowdingStats crowding_stats(
    const std::vector<SceneSample>& dataset,
    const std::vector<double>& thresholds = {0.3, 0.4, 0.5, 0.6});

std::string crowding_stats_text(const CrowdingStats& stats);

struct MetricsReport {
  double recall_at_005 = 0.0;
  double recall_at_mmr_optimal = 0.0;
  double mmr_optimal_threshold = 0.0;
  double ap = 0.0;
  double mmr = 0.0;
  long tp = 0, fp = 0, fn = 0;  // at score >= 0.05
  struct IterationRow {
    int iteration = 0;
    double recall = 0.0;  // at score >= 0.05
    double ap = 0.0;
  };
  std::vector<IterationRow> per_iteration;
};

// Full report; the per-iteration breakdown uses detections with
// iteration tag <= t (untagged detections count as iteration 1).
MetricsReport compute_report(const std::vector<EvalSample>& samples,
                             double iou_threshold = 0.5);

std::string report_to_json_string(const MetricsReport& report);
MetricsReport report_from_json_string(const std::string& text);
std::string report_to_text(const MetricsReport& report);

// Pooled PR curve as "score,recall,precision" rows.
std::string pr_curve_csv(const std::vector<EvalSample>& samples,
                         double iou_threshold = 0.5);

}  // namespace iterdet
