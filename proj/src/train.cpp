#include "iterdet/train.hpp"

#include <numeric>
#include <stdexcept>

#include "iterdet/iterdet.hpp"
#include "iterdet/nn.hpp"

namespace iterdet {

TrainResult train_detector(const std::vector<SceneSample>& dataset,
                           const DetectorConfig& det_config,
                           const TrainConfig& train_config,
                           const std::function<void(int, double)>& on_epoch,
                           const DetectorParams* initial) {
  if (dataset.empty()) {
    throw std::invalid_argument("train_detector: empty dataset");
  }
  if (train_config.batch_size < 1 || train_config.epochs < 1) {
    throw std::invalid_argument("train_detector: invalid schedule");
  }

  TrainResult result;
  if (initial) {
    result.params = *initial;
  } else {
    Rng init_rng(mix_seed(train_config.seed, 0xC0DE));
    result.params = init_detector(det_config, init_rng);
  }

  AdamConfig adam;
  adam.lr = train_config.lr;
  auto params = result.params.param_list();
  OptimizerState state = OptimizerState::init(
      {params.begin(), params.end()}, adam);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
    Rng rng(mix_seed(train_config.seed, 0xE90C + epoch));
    // Fisher-Yates shuffle.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1],
                order[rng.uniform_int(0, static_cast<int>(i) - 1)]);
    }
    double epoch_loss = 0.0;
    std::size_t pos = 0;
    while (pos < order.size()) {
      const std::size_t batch_end =
          std::min(pos + train_config.batch_size, order.size());
      std::vector<Tensor> accum;
      double batch_loss = 0.0;
      for (std::size_t i = pos; i < batch_end; ++i) {
        TrainingExample example =
            make_training_example(dataset[order[i]], rng);
        LossGrads lg = loss_and_grads(example.image, example.history,
                                      example.targets, result.params,
                                      det_config);
        batch_loss += lg.loss;
        if (accum.empty()) {
          accum = std::move(lg.grads);
        } else {
          for (std::size_t g = 0; g < accum.size(); ++g) {
            for (std::size_t j = 0; j < accum[g].data.size(); ++j) {
              accum[g].data[j] += lg.grads[g].data[j];
            }
          }
        }
      }
      const double scale = 1.0 / static_cast<double>(batch_end - pos);
      for (Tensor& g : accum) {
        for (double& v : g.data) v *= scale;
      }
      epoch_loss += batch_loss;
      std::vector<const Tensor*> grad_ptrs;
      for (const Tensor& g : accum) grad_ptrs.push_back(&g);
      adam_step(params, grad_ptrs, state);
      pos = batch_end;
    }
    epoch_loss /= static_cast<double>(dataset.size());
    result.epoch_loss.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  return result;
}

}  // namespace iterdet
