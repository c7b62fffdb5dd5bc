#pragma once

#include <vector>

#include "iterdet/geometry.hpp"

namespace iterdet {

// Greedy non-maximum suppression. Repeatedly keeps the highest-score box
// and removes remaining boxes with IoU strictly greater than the threshold.
// Score ties break toward the lower input index. Output sorted by
// descending score.
std::vector<ScoredBox> greedy_nms(const std::vector<ScoredBox>& boxes,
                                  double iou_threshold);

// Linear soft-NMS: instead of removal, decays each remaining score by
// (1 - IoU) when IoU exceeds iou_threshold; boxes whose final score falls
// below final_threshold are dropped.
std::vector<ScoredBox> soft_nms_linear(const std::vector<ScoredBox>& boxes,
                                       double iou_threshold,
                                       double final_threshold);

}  // namespace iterdet
