#include "iterdet/nms.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace iterdet {

namespace {

void check_threshold(double t, const char* name) {
  if (t < 0.0 || t > 1.0) {
    throw std::invalid_argument(std::string(name) + " must be in [0,1]");
  }
}

// Indices sorted by descending score, ties toward lower index.
std::vector<std::size_t> score_order(const std::vector<ScoredBox>& boxes) {
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return boxes[a].score > boxes[b].score;
                   });
  return order;
}

}  // namespace

std::vector<ScoredBox> greedy_nms(const std::vector<ScoredBox>& boxes,
                                  double iou_threshold) {
  check_threshold(iou_threshold, "iou_threshold");
  const auto order = score_order(boxes);
  std::vector<char> removed(boxes.size(), 0);
  std::vector<ScoredBox> kept;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (removed[order[i]]) continue;
    const ScoredBox& top = boxes[order[i]];
    kept.push_back(top);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (removed[order[j]]) continue;
      if (iou(top.box, boxes[order[j]].box) > iou_threshold) {
        removed[order[j]] = 1;
      }
    }
  }
  return kept;
}

std::vector<ScoredBox> soft_nms_linear(const std::vector<ScoredBox>& boxes,
                                       double iou_threshold,
                                       double final_threshold) {
  check_threshold(iou_threshold, "iou_threshold");
  check_threshold(final_threshold, "final_threshold");
  std::vector<ScoredBox> pool = boxes;
  std::vector<char> done(pool.size(), 0);
  std::vector<ScoredBox> result;
  for (std::size_t round = 0; round < pool.size(); ++round) {
    // Current maximum among the not-yet-selected boxes.
    std::size_t best = pool.size();
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (done[i]) continue;
      if (best == pool.size() || pool[i].score > pool[best].score) best = i;
    }
    if (best == pool.size()) break;
    done[best] = 1;
    result.push_back(pool[best]);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (done[i]) continue;
      const double o = iou(pool[best].box, pool[i].box);
      if (o > iou_threshold) pool[i].score *= (1.0 - o);
    }
  }
  std::erase_if(result,
                [&](const ScoredBox& b) { return b.score < final_threshold; });
  return result;
}

}  // namespace iterdet
