#pragma once

#include <functional>
#include <vector>

#include "iterdet/detector.hpp"
#include "iterdet/synthetic.hpp"

namespace iterdet {

struct TrainConfig {
  int epochs = 10;
  int batch_size = 8;
  double lr = 1e-4;
  std::uint64_t seed = 0;
};

struct TrainResult {
  DetectorParams params;
  std::vector<double> epoch_loss;  // mean loss per epoch
};

// Trains the history-aware detector with per-example random ground-truth
// splits and flip/zoom augmentation. Single-threaded and deterministic
// for a fixed seed. `on_epoch`, when set, is called after each epoch.
// When `initial` is given, training continues from those weights.
TrainResult train_detector(
    const std::vector<SceneSample>& dataset, const DetectorConfig& det_config,
    const TrainConfig& train_config,
    const std::function<void(int, double)>& on_epoch = nullptr,
    const DetectorParams* initial = nullptr);

}  // namespace iterdet
