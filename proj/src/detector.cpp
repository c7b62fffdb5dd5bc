#include "iterdet/detector.hpp"

#include <cmath>
#include <stdexcept>

#include "iterdet/nms.hpp"

namespace iterdet {

std::vector<Tensor*> DetectorParams::param_list() {
  std::vector<Tensor*> out;
  for_each_param([&](const std::string&, Tensor& t) { out.push_back(&t); });
  return out;
}

std::vector<const Tensor*> DetectorParams::param_list() const {
  std::vector<const Tensor*> out;
  for_each_param(
      [&](const std::string&, const Tensor& t) { out.push_back(&t); });
  return out;
}

DetectorParams init_detector(const DetectorConfig& config, Rng& rng) {
  if (config.stem_stride != config.history_stride) {
    throw std::invalid_argument(
        "detector: image and history stems must share a stride so their "
        "outputs can be summed");
  }
  const int c = config.stem_channels;
  DetectorParams params;
  params.image_stem = make_conv(c, 3, config.stem_kernel, config.stem_stride,
                                (config.stem_kernel - 1) / 2, rng);
  params.history_stem =
      make_zero_conv(c, 1, config.history_kernel, config.history_stride,
                     (config.history_kernel - 1) / 2);
  for (int i = 0; i < config.trunk_depth; ++i) {
    const int stride = i == 0 ? 2 : 1;
    params.trunk.push_back(make_conv(c, c, 3, stride, 1, rng));
  }
  params.score_head = make_conv(1, c, 3, 1, 1, rng);
  params.box_head = make_conv(4, c, 3, 1, 1, rng);
  return params;
}

namespace {

Tensor history_to_tensor(const HistoryMap& history) {
  Tensor t({1, history.height(), history.width()});
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    t.data[i] = static_cast<double>(history.counts()[i]);
  }
  return t;
}

struct ForwardCache {
  Tensor hist_float;
  Tensor stem_sum;               // pre-ReLU sum of the two stems
  Tensor stem_act;               // relu(stem_sum)
  std::vector<Tensor> trunk_pre; // per trunk layer, pre-ReLU
  std::vector<Tensor> trunk_act;
};

DenseOutput forward_impl(const Tensor& image, const Tensor* hist_float,
                         const DetectorParams& params, ForwardCache* cache) {
  if (image.shape.size() != 3 || image.shape[0] != 3) {
    throw std::invalid_argument("detector forward: image must be [3,H,W]");
  }
  Tensor sum = conv2d_forward(image, params.image_stem);
  if (hist_float) {
    if (hist_float->shape[1] != image.shape[1] ||
        hist_float->shape[2] != image.shape[2]) {
      throw std::invalid_argument(
          "detector forward: history dims must equal image dims");
    }
    Tensor hist_out = conv2d_forward(*hist_float, params.history_stem);
    for (std::size_t i = 0; i < sum.data.size(); ++i) {
      sum.data[i] += hist_out.data[i];
    }
  }
  Tensor act = relu_forward(sum);
  if (cache) {
    if (hist_float) cache->hist_float = *hist_float;
    cache->stem_sum = sum;
    cache->stem_act = act;
  }
  const Tensor* prev = cache ? &cache->stem_act : &act;
  Tensor pre, cur;
  for (std::size_t i = 0; i < params.trunk.size(); ++i) {
    pre = conv2d_forward(*prev, params.trunk[i]);
    cur = relu_forward(pre);
    if (cache) {
      cache->trunk_pre.push_back(pre);
      cache->trunk_act.push_back(cur);
      prev = &cache->trunk_act.back();
    } else {
      act = std::move(cur);
      prev = &act;
    }
  }
  DenseOutput out;
  out.score_logits = conv2d_forward(*prev, params.score_head);
  out.box_distances = conv2d_forward(*prev, params.box_head);
  return out;
}

}  // namespace

DenseOutput forward(const Tensor& image, const HistoryMap& history,
                    const DetectorParams& params) {
  Tensor hist = history_to_tensor(history);
  return forward_impl(image, &hist, params, nullptr);
}

DenseOutput forward_no_history(const Tensor& image,
                               const DetectorParams& params) {
  return forward_impl(image, nullptr, params, nullptr);
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

constexpr double kLogDistClamp = 10.0;
constexpr double kMinDistance = 1e-3;

}  // namespace

std::vector<ScoredBox> decode_candidates(const DenseOutput& out,
                                         const DetectorConfig& config) {
  const int h = out.score_logits.shape[1];
  const int w = out.score_logits.shape[2];
  const double stride = static_cast<double>(config.head_stride);
  std::vector<ScoredBox> candidates;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const double score = sigmoid(out.score_logits.at3(0, i, j));
      if (score < config.score_threshold) continue;
      const double cx = (j + 0.5) * stride;
      const double cy = (i + 0.5) * stride;
      double d[4];
      for (int k = 0; k < 4; ++k) {
        double u = out.box_distances.at3(k, i, j);
        u = std::min(std::max(u, -kLogDistClamp), kLogDistClamp);
        d[k] = std::exp(u);
      }
      // d = (left, top, right, bottom)
      candidates.push_back(
          {BBox{cx - d[0], cy - d[1], d[0] + d[2], d[1] + d[3]}, score, 0});
    }
  }
  return candidates;
}

std::vector<ScoredBox> decode(const DenseOutput& out,
                              const DetectorConfig& config) {
  return greedy_nms(decode_candidates(out, config), config.nms_iou);
}

LossGrads loss_and_grads(const Tensor& image, const HistoryMap& history,
                         const std::vector<BBox>& targets,
                         const DetectorParams& params,
                         const DetectorConfig& config) {
  Tensor hist = history_to_tensor(history);
  ForwardCache cache;
  DenseOutput out = forward_impl(image, &hist, params, &cache);

  const int h = out.score_logits.shape[1];
  const int w = out.score_logits.shape[2];
  const double stride = static_cast<double>(config.head_stride);

  // Positive assignment: center inside a target box; ties go to the
  // smaller-area box.
  std::vector<int> assignment(static_cast<std::size_t>(h) * w, -1);
  int npos = 0;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const double cx = (j + 0.5) * stride;
      const double cy = (i + 0.5) * stride;
      int best = -1;
      for (std::size_t t = 0; t < targets.size(); ++t) {
        const BBox& b = targets[t];
        if (cx < b.x || cx > b.x2() || cy < b.y || cy > b.y2()) continue;
        if (best < 0 || b.area() < targets[best].area()) {
          best = static_cast<int>(t);
        }
      }
      assignment[static_cast<std::size_t>(i) * w + j] = best;
      if (best >= 0) ++npos;
    }
  }
  const double norm = static_cast<double>(std::max(1, npos));

  const double alpha = config.focal_alpha;
  const double gamma = config.focal_gamma;
  double loss = 0.0;
  Tensor g_score(out.score_logits.shape);
  Tensor g_box(out.box_distances.shape);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const double z = out.score_logits.at3(0, i, j);
      const double p = sigmoid(z);
      const double q = 1.0 - p;
      const double log_p = -softplus(-z);
      const double log_q = -softplus(z);
      const int target = assignment[static_cast<std::size_t>(i) * w + j];
      if (target >= 0) {
        loss += -alpha * std::pow(q, gamma) * log_p / norm;
        g_score.at3(0, i, j) =
            alpha * std::pow(q, gamma) * (gamma * p * log_p - q) / norm;
        const BBox& b = targets[target];
        const double cx = (j + 0.5) * stride;
        const double cy = (i + 0.5) * stride;
        const double dist[4] = {cx - b.x, cy - b.y, b.x2() - cx, b.y2() - cy};
        for (int k = 0; k < 4; ++k) {
          const double u_target = std::log(std::max(dist[k], kMinDistance));
          const double u = out.box_distances.at3(k, i, j);
          loss += config.l1_weight * std::abs(u - u_target) / norm;
          g_box.at3(k, i, j) =
              config.l1_weight * (u > u_target ? 1.0 : u < u_target ? -1.0 : 0.0) /
              norm;
        }
      } else {
        loss += -(1.0 - alpha) * std::pow(p, gamma) * log_q / norm;
        g_score.at3(0, i, j) =
            (1.0 - alpha) * std::pow(p, gamma) * (p - gamma * q * log_q) / norm;
      }
    }
  }
  if (!std::isfinite(loss)) {
    throw std::runtime_error("loss_and_grads: non-finite loss");
  }

  // Backward through heads.
  const Tensor& last_act =
      cache.trunk_act.empty() ? cache.stem_act : cache.trunk_act.back();
  ConvGrads score_head_g = conv2d_backward(last_act, params.score_head, g_score);
  ConvGrads box_head_g = conv2d_backward(last_act, params.box_head, g_box);
  Tensor g = score_head_g.input;
  for (std::size_t i = 0; i < g.data.size(); ++i) {
    g.data[i] += box_head_g.input.data[i];
  }

  // Backward through the trunk.
  std::vector<ConvGrads> trunk_g(params.trunk.size());
  for (int i = static_cast<int>(params.trunk.size()) - 1; i >= 0; --i) {
    g = relu_backward(cache.trunk_pre[i], g);
    const Tensor& input = i == 0 ? cache.stem_act : cache.trunk_act[i - 1];
    trunk_g[i] = conv2d_backward(input, params.trunk[i], g);
    g = std::move(trunk_g[i].input);
  }

  // Backward through the summed stems.
  g = relu_backward(cache.stem_sum, g);
  ConvGrads image_stem_g = conv2d_backward(image, params.image_stem, g);
  ConvGrads history_stem_g =
      conv2d_backward(cache.hist_float, params.history_stem, g);

  LossGrads result;
  result.loss = loss;
  result.grads.push_back(std::move(image_stem_g.weights));
  result.grads.push_back(std::move(image_stem_g.bias));
  result.grads.push_back(std::move(history_stem_g.weights));
  result.grads.push_back(std::move(history_stem_g.bias));
  for (auto& tg : trunk_g) {
    result.grads.push_back(std::move(tg.weights));
    result.grads.push_back(std::move(tg.bias));
  }
  result.grads.push_back(std::move(score_head_g.weights));
  result.grads.push_back(std::move(score_head_g.bias));
  result.grads.push_back(std::move(box_head_g.weights));
  result.grads.push_back(std::move(box_head_g.bias));
  return result;
}

}  // namespace iterdet
