#pragma once

#include <vector>

#include "iterdet/geometry.hpp"
#include "iterdet/nn.hpp"

namespace iterdet {

struct DetectorConfig {
  int stem_channels = 16;
  int trunk_depth = 3;
  int stem_kernel = 7;
  int stem_stride = 2;
  int history_kernel = 3;
  int history_stride = 2;
  int head_stride = 4;  // total output stride
  double score_threshold = 0.05;
  double nms_iou = 0.5;
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;
  double l1_weight = 1.0;

  bool operator==(const DetectorConfig&) const = default;
};

// All learnable weights of the tiny detector.
//
// Topology: image stem (3 -> stem_channels, stride 2) and history stem
// (1 -> stem_channels, stride 2) summed before a shared ReLU, a conv
// trunk whose first layer has stride 2 (total stride 4), then two 3x3
// heads: a 1-channel objectness map and a 4-channel map of log-space
// distances (left, top, right, bottom) to box edges.
struct DetectorParams {
  ConvLayer image_stem;
  ConvLayer history_stem;  // zero-initialized; iteration 1 matches a
                           // history-free detector at init
  std::vector<ConvLayer> trunk;
  ConvLayer score_head;
  ConvLayer box_head;

  template <typename Fn>
  void for_each_param(Fn&& fn) {
    fn("image_stem.weights", image_stem.weights);
    fn("image_stem.bias", image_stem.bias);
    fn("history_stem.weights", history_stem.weights);
    fn("history_stem.bias", history_stem.bias);
    for (std::size_t i = 0; i < trunk.size(); ++i) {
      fn("trunk." + std::to_string(i) + ".weights", trunk[i].weights);
      fn("trunk." + std::to_string(i) + ".bias", trunk[i].bias);
    }
    fn("score_head.weights", score_head.weights);
    fn("score_head.bias", score_head.bias);
    fn("box_head.weights", box_head.weights);
    fn("box_head.bias", box_head.bias);
  }

  template <typename Fn>
  void for_each_param(Fn&& fn) const {
    const_cast<DetectorParams*>(this)->for_each_param(
        [&](const std::string& name, Tensor& t) {
          fn(name, static_cast<const Tensor&>(t));
        });
  }

  std::vector<Tensor*> param_list();
  std::vector<const Tensor*> param_list() const;
};

DetectorParams init_detector(const DetectorConfig& config, Rng& rng);

struct DenseOutput {
  Tensor score_logits;    // [1, H', W']
  Tensor box_distances;   // [4, H', W'], log-space

  bool operator==(const DenseOutput&) const = default;
};

// Full forward pass: relu(image_stem(image) + history_stem(history)),
// trunk, heads. History counts are converted to floats at this boundary.
DenseOutput forward(const Tensor& image, const HistoryMap& history,
                    const DetectorParams& params);

// Forward pass with the history branch ablated entirely.
DenseOutput forward_no_history(const Tensor& image,
                               const DetectorParams& params);

// Per-location decode without suppression: every location whose sigmoid
// score reaches the threshold yields one candidate box.
std::vector<ScoredBox> decode_candidates(const DenseOutput& out,
                                         const DetectorConfig& config);

// decode_candidates followed by greedy NMS at config.nms_iou.
std::vector<ScoredBox> decode(const DenseOutput& out,
                              const DetectorConfig& config);

struct LossGrads {
  double loss = 0.0;
  std::vector<Tensor> grads;  // aligned with DetectorParams::param_list order
};

// Focal objectness loss plus L1 on log-distances at positive locations.
// Positives are output locations whose image-space center lies inside a
// target box; everything else, including locations covered by history
// boxes, is background.
LossGrads loss_and_grads(const Tensor& image, const HistoryMap& history,
                         const std::vector<BBox>& targets,
                         const DetectorParams& params,
                         const DetectorConfig& config);

}  // namespace iterdet
