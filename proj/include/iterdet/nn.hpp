#pragma once

#include <functional>
#include <string>
#include <vector>

#include "iterdet/random.hpp"
#include "iterdet/tensor.hpp"

namespace iterdet {

// 2-d convolution (cross-correlation, zero padding).
struct ConvLayer {
  Tensor weights;  // [out_ch, in_ch, k, k]
  Tensor bias;     // [out_ch]
  int stride = 1;
  int padding = 0;

  int out_channels() const { return weights.shape[0]; }
  int in_channels() const { return weights.shape[1]; }
  int kernel() const { return weights.shape[2]; }
};

// Glorot-uniform initialization from a seeded generator.
ConvLayer make_conv(int out_ch, int in_ch, int kernel, int stride, int padding,
                    Rng& rng);

// Same-shape layer with zero weights and bias.
ConvLayer make_zero_conv(int out_ch, int in_ch, int kernel, int stride,
                         int padding);

struct ConvGrads {
  Tensor input;    // [C, H, W]
  Tensor weights;  // same shape as layer.weights
  Tensor bias;     // same shape as layer.bias
};

// input [C, H, W] -> output [C', H', W'] with
// H' = (H + 2p - k) / stride + 1 (floor), same for W'.
Tensor conv2d_forward(const Tensor& input, const ConvLayer& layer);

// Exact gradients of conv2d_forward with respect to input, weights, bias.
ConvGrads conv2d_backward(const Tensor& input, const ConvLayer& layer,
                          const Tensor& upstream_grad);

Tensor relu_forward(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& upstream);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam moments for a flat list of parameter tensors.
struct OptimizerState {
  AdamConfig config;
  std::vector<Tensor> m;  // first moments, shape-matched to the parameters
  std::vector<Tensor> v;  // second moments
  long step = 0;

  static OptimizerState init(const std::vector<const Tensor*>& params,
                             const AdamConfig& config);
};

// One Adam step with bias correction, in place over params.
// Throws if any gradient is non-finite, naming the parameter index.
void adam_step(std::vector<Tensor*>& params,
               const std::vector<const Tensor*>& grads, OptimizerState& state);

// Central-difference check of an analytic gradient.
// f maps the flattened point to a scalar; returns the worst relative error
// over all coordinates. Coordinates where both gradients are below
// `ignore_below` in magnitude are compared absolutely.
double grad_check(const std::function<double(const std::vector<Tensor>&)>& f,
                  const std::vector<Tensor>& point,
                  const std::vector<Tensor>& analytic_grad, double step,
                  double ignore_below = 1e-10);

}  // namespace iterdet
