#include "iterdet/iterdet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace iterdet {

GroundTruthSplit split_with_fraction(const std::vector<BBox>& all_boxes,
                                     double q, Rng& rng) {
  GroundTruthSplit split;
  for (const BBox& b : all_boxes) {
    if (rng.uniform() < q) {
      split.old_boxes.push_back(b);
    } else {
      split.new_boxes.push_back(b);
    }
  }
  return split;
}

GroundTruthSplit split_ground_truth(const std::vector<BBox>& all_boxes,
                                    Rng& rng) {
  const double q = rng.uniform();
  return split_with_fraction(all_boxes, q, rng);
}

std::pair<Tensor, std::vector<BBox>> augment_scene(const SceneSample& scene,
                                                   bool flip, double zoom) {
  if (!(zoom > 0.0)) throw std::invalid_argument("augment_scene: zoom <= 0");
  const int h = scene.image.shape[1];
  const int w = scene.image.shape[2];
  Tensor image({3, h, w});
  for (int py = 0; py < h; ++py) {
    const int sy = static_cast<int>(std::floor((py + 0.5) / zoom));
    for (int px = 0; px < w; ++px) {
      const int out_x = flip ? w - 1 - px : px;
      const int sx = static_cast<int>(std::floor((px + 0.5) / zoom));
      if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;  // fill stays 0
      for (int c = 0; c < 3; ++c) {
        image.at3(c, py, out_x) = scene.image.at3(c, sy, sx);
      }
    }
  }
  std::vector<BBox> boxes;
  for (const BBox& b : scene.boxes) {
    BBox z{b.x * zoom, b.y * zoom, b.w * zoom, b.h * zoom};
    if (flip) {
      // Pixel-center mirror: pixel column x maps to w-1-x, so the
      // inclusive raster footprint mirrors exactly.
      z.x = (w - 1) - z.x - z.w;
    }
    boxes.push_back(z);
  }
  return {std::move(image), std::move(boxes)};
}

TrainingExample make_training_example(const SceneSample& scene, Rng& rng) {
  const bool flip = rng.bernoulli(0.5);
  const double zoom = rng.uniform(0.75, 1.25);
  auto [image, boxes] = augment_scene(scene, flip, zoom);
  GroundTruthSplit split = split_ground_truth(boxes, rng);
  TrainingExample example;
  example.history =
      rasterize_history(split.old_boxes, image.shape[2], image.shape[1]);
  example.image = std::move(image);
  example.targets = std::move(split.new_boxes);
  return example;
}

DetectFn make_detect_fn(const DetectorParams& params,
                        const DetectorConfig& config) {
  return [&params, config](const Tensor& image, const HistoryMap& history) {
    return decode(forward(image, history, params), config);
  };
}

DetectFn make_candidates_fn(const DetectorParams& params,
                            const DetectorConfig& config) {
  return [&params, config](const Tensor& image, const HistoryMap& history) {
    return decode_candidates(forward(image, history, params), config);
  };
}

IterResult infer_iterative(const Tensor& image, const DetectFn& detect,
                           const IterConfig& config) {
  if (config.max_iterations < 1) {
    throw std::invalid_argument("infer_iterative: max_iterations must be >= 1");
  }
  const int w = image.shape[2];
  const int h = image.shape[1];
  IterResult result;
  std::vector<BBox> detected;
  for (int t = 1; t <= config.max_iterations; ++t) {
    HistoryMap history = rasterize_history(detected, w, h);
    std::vector<ScoredBox> found = detect(image, history);
    std::erase_if(found, [&](const ScoredBox& b) {
      return b.score < config.stop_score;
    });
    result.iterations_run = t;
    result.per_iteration_counts.push_back(static_cast<int>(found.size()));
    if (found.empty()) break;
    for (ScoredBox b : found) {
      b.iteration = t;
      detected.push_back(b.box);
      result.boxes.push_back(b);
    }
  }
  return result;
}

IterResult infer_one_per_iteration(const Tensor& image,
                                   const DetectFn& candidates,
                                   const IterConfig& config) {
  const int w = image.shape[2];
  const int h = image.shape[1];
  IterResult result;
  std::vector<BBox> detected;
  for (int t = 1; static_cast<int>(detected.size()) < config.max_total; ++t) {
    HistoryMap history = rasterize_history(detected, w, h);
    std::vector<ScoredBox> found = candidates(image, history);
    // Highest probability wins; ties break toward the lower index.
    std::size_t best = found.size();
    for (std::size_t i = 0; i < found.size(); ++i) {
      if (best == found.size() || found[i].score > found[best].score) best = i;
    }
    result.iterations_run = t;
    if (best == found.size() || found[best].score < config.stop_score) {
      result.per_iteration_counts.push_back(0);
      break;
    }
    ScoredBox b = found[best];
    b.iteration = t;
    detected.push_back(b.box);
    result.boxes.push_back(b);
    result.per_iteration_counts.push_back(1);
  }
  return result;
}

IterResult run_inference(const Tensor& image, const DetectorParams& params,
                         const DetectorConfig& det_config,
                         const IterConfig& iter_config) {
  if (iter_config.mode == IterMode::OnePerIteration) {
    return infer_one_per_iteration(
        image, make_candidates_fn(params, det_config), iter_config);
  }
  return infer_iterative(image, make_detect_fn(params, det_config),
                         iter_config);
}

}  // namespace iterdet
