#include "iterdet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

using nlohmann::json;

namespace iterdet {

MatchResult match_detections(const EvalSample& sample, double iou_threshold) {
  MatchResult result;
  result.order.resize(sample.detections.size());
  std::iota(result.order.begin(), result.order.end(), 0);
  std::stable_sort(result.order.begin(), result.order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return sample.detections[a].score >
                            sample.detections[b].score;
                   });
  result.is_tp.assign(sample.detections.size(), 0);
  std::vector<char> gt_used(sample.ground_truth.size(), 0);
  for (std::size_t r = 0; r < result.order.size(); ++r) {
    const ScoredBox& det = sample.detections[result.order[r]];
    auto clipped = sample.width > 0
                       ? clip_box(det.box, sample.width, sample.height)
                       : std::optional<BBox>(det.box);
    if (!clipped) continue;
    double best_iou = 0.0;
    std::size_t best = sample.ground_truth.size();
    for (std::size_t g = 0; g < sample.ground_truth.size(); ++g) {
      if (gt_used[g]) continue;
      const double o = iou(*clipped, sample.ground_truth[g]);
      if (o > best_iou) {
        best_iou = o;
        best = g;
      }
    }
    if (best < sample.ground_truth.size() && best_iou >= iou_threshold) {
      gt_used[best] = 1;
      result.is_tp[r] = 1;
    }
  }
  return result;
}

namespace {

struct PooledDetection {
  double score;
  bool tp;
};

struct PooledMatches {
  std::vector<PooledDetection> detections;  // descending score
  long total_gt = 0;
  long n_images = 0;
};

PooledMatches pool_matches(const std::vector<EvalSample>& samples,
                           double iou_threshold) {
  PooledMatches pooled;
  pooled.n_images = static_cast<long>(samples.size());
  for (const EvalSample& sample : samples) {
    pooled.total_gt += static_cast<long>(sample.ground_truth.size());
    MatchResult match = match_detections(sample, iou_threshold);
    for (std::size_t r = 0; r < match.order.size(); ++r) {
      pooled.detections.push_back(
          {sample.detections[match.order[r]].score, match.is_tp[r] != 0});
    }
  }
  std::stable_sort(pooled.detections.begin(), pooled.detections.end(),
                   [](const PooledDetection& a, const PooledDetection& b) {
                     return a.score > b.score;
                   });
  return pooled;
}

struct OperatingPoint {
  double score;  // threshold (inclusive)
  long tp;
  long fp;
};

// One point per distinct detection score, cumulative counts.
std::vector<OperatingPoint> sweep(const PooledMatches& pooled) {
  std::vector<OperatingPoint> points;
  long tp = 0, fp = 0;
  for (std::size_t i = 0; i < pooled.detections.size(); ++i) {
    if (pooled.detections[i].tp) {
      ++tp;
    } else {
      ++fp;
    }
    const bool boundary = i + 1 == pooled.detections.size() ||
                          pooled.detections[i + 1].score <
                              pooled.detections[i].score;
    if (boundary) points.push_back({pooled.detections[i].score, tp, fp});
  }
  return points;
}

void require_gt(const PooledMatches& pooled, const char* op) {
  if (pooled.total_gt == 0) {
    throw std::invalid_argument(std::string(op) +
                                ": undefined with zero ground-truth boxes");
  }
}

double ap_from_points(const std::vector<OperatingPoint>& points,
                      long total_gt) {
  // All-point interpolation: integrate the precision envelope over recall.
  double ap = 0.0;
  double env = 0.0;
  double prev_recall = 0.0;
  std::vector<double> recalls, precisions;
  for (const OperatingPoint& pt : points) {
    recalls.push_back(static_cast<double>(pt.tp) / total_gt);
    precisions.push_back(static_cast<double>(pt.tp) / (pt.tp + pt.fp));
  }
  // Envelope from the right: max precision at recall >= r.
  for (int i = static_cast<int>(points.size()) - 1; i >= 0; --i) {
    env = std::max(env, precisions[i]);
    precisions[i] = env;
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    ap += (recalls[i] - prev_recall) * precisions[i];
    prev_recall = recalls[i];
  }
  return ap * 100.0;
}

constexpr double kMissFloor = 1e-5;

struct MmrResult {
  double mmr;
  double optimal_threshold;  // loosest threshold with FPPI <= 1
  double recall_at_optimal;
};

MmrResult mmr_from_points(const std::vector<OperatingPoint>& points,
                          long total_gt, long n_images) {
  MmrResult out{0.0, 0.0, 0.0};
  double log_sum = 0.0;
  for (int k = 0; k <= 8; ++k) {
    const double target = std::pow(10.0, -2.0 + k / 4.0);
    double miss = 1.0;
    if (!points.empty()) {
      // FPPI is nondecreasing along the sweep, so the feasible set is a
      // prefix; its last element has the best recall.
      int chosen = -1;
      for (std::size_t i = 0; i < points.size(); ++i) {
        const double fppi = static_cast<double>(points[i].fp) / n_images;
        if (fppi <= target) chosen = static_cast<int>(i);
      }
      if (chosen < 0) chosen = 0;  // no threshold achieves the target
      miss = 1.0 - static_cast<double>(points[chosen].tp) / total_gt;
      if (k == 8) {
        out.optimal_threshold = points[chosen].score;
        out.recall_at_optimal =
            100.0 * static_cast<double>(points[chosen].tp) / total_gt;
      }
    }
    log_sum += std::log(std::max(miss, kMissFloor));
  }
  out.mmr = std::exp(log_sum / 9.0) * 100.0;
  return out;
}

}  // namespace

double average_precision(const std::vector<EvalSample>& samples,
                         double iou_threshold) {
  PooledMatches pooled = pool_matches(samples, iou_threshold);
  require_gt(pooled, "average_precision");
  return ap_from_points(sweep(pooled), pooled.total_gt);
}

double recall_at(const std::vector<EvalSample>& samples, double score_threshold,
                 double iou_threshold) {
  PooledMatches pooled = pool_matches(samples, iou_threshold);
  require_gt(pooled, "recall_at");
  long tp = 0;
  for (const PooledDetection& d : pooled.detections) {
    if (d.score >= score_threshold && d.tp) ++tp;
  }
  return 100.0 * static_cast<double>(tp) / pooled.total_gt;
}

double mmr(const std::vector<EvalSample>& samples, double iou_threshold) {
  if (samples.empty()) throw std::invalid_argument("mmr: needs >= 1 image");
  PooledMatches pooled = pool_matches(samples, iou_threshold);
  require_gt(pooled, "mmr");
  return mmr_from_points(sweep(pooled), pooled.total_gt, pooled.n_images).mmr;
}

CrowdingStats crowding_stats(const std::vector<SceneSample>& dataset,
                             const std::vector<double>& thresholds) {
  CrowdingStats stats;
  stats.thresholds = thresholds;
  stats.pairs_per_image.assign(thresholds.size(), 0.0);
  if (dataset.empty()) return stats;
  double objects = 0.0;
  for (const SceneSample& scene : dataset) {
    objects += static_cast<double>(scene.boxes.size());
    for (std::size_t i = 0; i < scene.boxes.size(); ++i) {
      for (std::size_t j = i + 1; j < scene.boxes.size(); ++j) {
        const double o = iou(scene.boxes[i], scene.boxes[j]);
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
          if (o > thresholds[t]) stats.pairs_per_image[t] += 1.0;
        }
      }
    }
  }
  stats.objects_per_image = objects / dataset.size();
  for (double& v : stats.pairs_per_image) v /= dataset.size();
  return stats;
}

std::string crowding_stats_text(const CrowdingStats& stats) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(2);
  out << "objects/image  " << stats.objects_per_image << "\n";
  for (std::size_t t = 0; t < stats.thresholds.size(); ++t) {
    out << "pairs/image IoU>" << stats.thresholds[t] << "  "
        << stats.pairs_per_image[t] << "\n";
  }
  return out.str();
}

MetricsReport compute_report(const std::vector<EvalSample>& samples,
                             double iou_threshold) {
  MetricsReport report;
  PooledMatches pooled = pool_matches(samples, iou_threshold);
  require_gt(pooled, "compute_report");
  const auto points = sweep(pooled);
  report.ap = ap_from_points(points, pooled.total_gt);
  const MmrResult m = mmr_from_points(points, pooled.total_gt, pooled.n_images);
  report.mmr = m.mmr;
  report.mmr_optimal_threshold = m.optimal_threshold;
  report.recall_at_mmr_optimal = m.recall_at_optimal;
  for (const PooledDetection& d : pooled.detections) {
    if (d.score < 0.05) continue;
    if (d.tp) {
      ++report.tp;
    } else {
      ++report.fp;
    }
  }
  report.fn = pooled.total_gt - report.tp;
  report.recall_at_005 =
      100.0 * static_cast<double>(report.tp) / pooled.total_gt;

  int max_iter = 1;
  for (const EvalSample& sample : samples) {
    for (const ScoredBox& d : sample.detections) {
      max_iter = std::max(max_iter, d.iteration);
    }
  }
  for (int t = 1; t <= max_iter; ++t) {
    std::vector<EvalSample> truncated;
    truncated.reserve(samples.size());
    for (const EvalSample& sample : samples) {
      EvalSample cut = sample;
      std::erase_if(cut.detections, [&](const ScoredBox& d) {
        return std::max(d.iteration, 1) > t;
      });
      truncated.push_back(std::move(cut));
    }
    MetricsReport::IterationRow row;
    row.iteration = t;
    row.recall = recall_at(truncated, 0.05, iou_threshold);
    row.ap = average_precision(truncated, iou_threshold);
    report.per_iteration.push_back(row);
  }
  return report;
}

std::string report_to_json_string(const MetricsReport& report) {
  json rows = json::array();
  for (const auto& row : report.per_iteration) {
    rows.push_back({{"iteration", row.iteration},
                    {"recall", row.recall},
                    {"ap", row.ap}});
  }
  json doc = {{"recall_at_0.05", report.recall_at_005},
              {"recall_at_mmr_optimal", report.recall_at_mmr_optimal},
              {"mmr_optimal_threshold", report.mmr_optimal_threshold},
              {"ap", report.ap},
              {"mmr", report.mmr},
              {"tp", report.tp},
              {"fp", report.fp},
              {"fn", report.fn},
              {"per_iteration", rows}};
  return doc.dump(2) + "\n";
}

MetricsReport report_from_json_string(const std::string& text) {
  json doc = json::parse(text);
  MetricsReport report;
  report.recall_at_005 = doc.at("recall_at_0.05").get<double>();
  report.recall_at_mmr_optimal = doc.at("recall_at_mmr_optimal").get<double>();
  report.mmr_optimal_threshold = doc.at("mmr_optimal_threshold").get<double>();
  report.ap = doc.at("ap").get<double>();
  report.mmr = doc.at("mmr").get<double>();
  report.tp = doc.at("tp").get<long>();
  report.fp = doc.at("fp").get<long>();
  report.fn = doc.at("fn").get<long>();
  for (const json& row : doc.at("per_iteration")) {
    report.per_iteration.push_back({row.at("iteration").get<int>(),
                                    row.at("recall").get<double>(),
                                    row.at("ap").get<double>()});
  }
  return report;
}

std::string report_to_text(const MetricsReport& report) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(2);
  out << "metric                     value\n";
  out << "recall @ 0.05              " << report.recall_at_005 << "\n";
  out << "recall @ mMR-optimal       " << report.recall_at_mmr_optimal
      << " (thr " << report.mmr_optimal_threshold << ")\n";
  out << "AP                         " << report.ap << "\n";
  out << "mMR                        " << report.mmr << "\n";
  out << "TP/FP/FN @ 0.05            " << report.tp << "/" << report.fp << "/"
      << report.fn << "\n";
  for (const auto& row : report.per_iteration) {
    out << "iter<=" << row.iteration << "  recall " << row.recall << "  AP "
        << row.ap << "\n";
  }
  return out.str();
}

std::string pr_curve_csv(const std::vector<EvalSample>& samples,
                         double iou_threshold) {
  PooledMatches pooled = pool_matches(samples, iou_threshold);
  require_gt(pooled, "pr_curve_csv");
  std::ostringstream out;
  out << "score,recall,precision\n";
  for (const OperatingPoint& pt : sweep(pooled)) {
    out << pt.score << ","
        << static_cast<double>(pt.tp) / pooled.total_gt << ","
        << static_cast<double>(pt.tp) / (pt.tp + pt.fp) << "\n";
  }
  return out.str();
}

}  // namespace iterdet
