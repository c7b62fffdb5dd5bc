#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "iterdet/detector.hpp"
#include "iterdet/geometry.hpp"
#include "iterdet/random.hpp"
#include "iterdet/synthetic.hpp"

namespace iterdet {

enum class IterMode { Standard, OnePerIteration };

struct IterConfig {
  int max_iterations = 2;
  double stop_score = 0.05;
  IterMode mode = IterMode::Standard;
  int max_total = 64;  // one-per-iteration safety limit
};

struct IterResult {
  std::vector<ScoredBox> boxes;  // tagged with the producing iteration
  std::vector<int> per_iteration_counts;
  int iterations_run = 0;
};

struct GroundTruthSplit {
  std::vector<BBox> old_boxes;  // becomes the history
  std::vector<BBox> new_boxes;  // becomes the prediction target
};

// Random partition: draws a keep-fraction q uniform on [0,1], then puts
// each box into the history side independently with probability q.
GroundTruthSplit split_ground_truth(const std::vector<BBox>& all_boxes,
                                    Rng& rng);

// Same partition with the keep-fraction fixed (exposed for tests).
GroundTruthSplit split_with_fraction(const std::vector<BBox>& all_boxes,
                                     double q, Rng& rng);

// Zoom about the image origin (boxes scaled by the same factor; pixels
// sampled nearest-neighbor, out-of-source pixels filled black), then an
// optional horizontal pixel-center mirror.
std::pair<Tensor, std::vector<BBox>> augment_scene(const SceneSample& scene,
                                                   bool flip, double zoom);

struct TrainingExample {
  Tensor image;
  HistoryMap history;
  std::vector<BBox> targets;
};

// Augmentation draw order: flip (p = 0.5), zoom (uniform in [0.75, 1.25]),
// then the ground-truth split.
TrainingExample make_training_example(const SceneSample& scene, Rng& rng);

// One detector pass: image + history -> scored boxes.
using DetectFn =
    std::function<std::vector<ScoredBox>(const Tensor&, const HistoryMap&)>;

// Standard pass (forward, decode, NMS) for trained parameters.
DetectFn make_detect_fn(const DetectorParams& params,
                        const DetectorConfig& config);

// Pass returning all per-location candidates without suppression.
DetectFn make_candidates_fn(const DetectorParams& params,
                            const DetectorConfig& config);

// The iterative loop: starts from an empty history, reruns the detector
// with the accumulated history, stops at the iteration limit or on the
// first empty iteration. The result is the plain union across iterations.
IterResult infer_iterative(const Tensor& image, const DetectFn& detect,
                           const IterConfig& config);

// Ablation: keeps only the single highest-scoring candidate per
// iteration; stops when the best score falls below stop_score or
// max_total boxes have been emitted.
IterResult infer_one_per_iteration(const Tensor& image,
                                   const DetectFn& candidates,
                                   const IterConfig& config);

// Dispatch on config.mode over trained parameters.
IterResult run_inference(const Tensor& image, const DetectorParams& params,
                         const DetectorConfig& det_config,
                         const IterConfig& iter_config);

}  // namespace iterdet
