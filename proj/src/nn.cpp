#include "iterdet/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace iterdet {

ConvLayer make_conv(int out_ch, int in_ch, int kernel, int stride, int padding,
                    Rng& rng) {
  if (kernel % 2 == 0) throw std::invalid_argument("conv kernel must be odd");
  if (stride < 1) throw std::invalid_argument("conv stride must be >= 1");
  ConvLayer layer;
  layer.weights = Tensor({out_ch, in_ch, kernel, kernel});
  layer.bias = Tensor({out_ch});
  layer.stride = stride;
  layer.padding = padding;
  const int fan_in = in_ch * kernel * kernel;
  const int fan_out = out_ch * kernel * kernel;
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& w : layer.weights.data) w = rng.uniform(-limit, limit);
  return layer;
}

ConvLayer make_zero_conv(int out_ch, int in_ch, int kernel, int stride,
                         int padding) {
  ConvLayer layer;
  layer.weights = Tensor({out_ch, in_ch, kernel, kernel});
  layer.bias = Tensor({out_ch});
  layer.stride = stride;
  layer.padding = padding;
  return layer;
}

namespace {

void check_conv_input(const Tensor& input, const ConvLayer& layer) {
  if (input.shape.size() != 3) {
    throw std::invalid_argument("conv2d: input must be [C,H,W], got " +
                                input.shape_str());
  }
  if (input.shape[0] != layer.in_channels()) {
    throw std::invalid_argument(
        "conv2d: input has " + std::to_string(input.shape[0]) +
        " channels, layer expects " + std::to_string(layer.in_channels()));
  }
  const int k = layer.kernel();
  const int p = layer.padding;
  if (input.shape[1] + 2 * p < k || input.shape[2] + 2 * p < k) {
    throw std::invalid_argument("conv2d: input " + input.shape_str() +
                                " too small for kernel " + std::to_string(k));
  }
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const ConvLayer& layer) {
  check_conv_input(input, layer);
  const int in_ch = layer.in_channels();
  const int out_ch = layer.out_channels();
  const int k = layer.kernel();
  const int s = layer.stride;
  const int p = layer.padding;
  const int in_h = input.shape[1], in_w = input.shape[2];
  const int out_h = (in_h + 2 * p - k) / s + 1;
  const int out_w = (in_w + 2 * p - k) / s + 1;

  Tensor out({out_ch, out_h, out_w});
  for (int oc = 0; oc < out_ch; ++oc) {
    const double b = layer.bias.data[oc];
    for (int oy = 0; oy < out_h; ++oy) {
      for (int ox = 0; ox < out_w; ++ox) {
        double acc = b;
        const int base_y = oy * s - p;
        const int base_x = ox * s - p;
        for (int ic = 0; ic < in_ch; ++ic) {
          for (int ky = 0; ky < k; ++ky) {
            const int iy = base_y + ky;
            if (iy < 0 || iy >= in_h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = base_x + kx;
              if (ix < 0 || ix >= in_w) continue;
              acc += input.at3(ic, iy, ix) * layer.weights.at4(oc, ic, ky, kx);
            }
          }
        }
        out.at3(oc, oy, ox) = acc;
      }
    }
  }
  return out;
}

ConvGrads conv2d_backward(const Tensor& input, const ConvLayer& layer,
                          const Tensor& upstream_grad) {
  check_conv_input(input, layer);
  const int in_ch = layer.in_channels();
  const int out_ch = layer.out_channels();
  const int k = layer.kernel();
  const int s = layer.stride;
  const int p = layer.padding;
  const int in_h = input.shape[1], in_w = input.shape[2];
  const int out_h = (in_h + 2 * p - k) / s + 1;
  const int out_w = (in_w + 2 * p - k) / s + 1;
  if (upstream_grad.shape != std::vector<int>{out_ch, out_h, out_w}) {
    throw std::invalid_argument("conv2d_backward: upstream grad shape " +
                                upstream_grad.shape_str() + " does not match " +
                                "forward output");
  }

  ConvGrads grads;
  grads.input = Tensor(input.shape);
  grads.weights = Tensor(layer.weights.shape);
  grads.bias = Tensor(layer.bias.shape);

  for (int oc = 0; oc < out_ch; ++oc) {
    for (int oy = 0; oy < out_h; ++oy) {
      for (int ox = 0; ox < out_w; ++ox) {
        const double g = upstream_grad.at3(oc, oy, ox);
        if (g == 0.0) continue;
        grads.bias.data[oc] += g;
        const int base_y = oy * s - p;
        const int base_x = ox * s - p;
        for (int ic = 0; ic < in_ch; ++ic) {
          for (int ky = 0; ky < k; ++ky) {
            const int iy = base_y + ky;
            if (iy < 0 || iy >= in_h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = base_x + kx;
              if (ix < 0 || ix >= in_w) continue;
              grads.weights.at4(oc, ic, ky, kx) += g * input.at3(ic, iy, ix);
              grads.input.at3(ic, iy, ix) +=
                  g * layer.weights.at4(oc, ic, ky, kx);
            }
          }
        }
      }
    }
  }
  return grads;
}

Tensor relu_forward(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& x, const Tensor& upstream) {
  if (!x.same_shape(upstream)) {
    throw std::invalid_argument("relu_backward: shape mismatch " +
                                x.shape_str() + " vs " + upstream.shape_str());
  }
  Tensor out = upstream;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    if (x.data[i] <= 0.0) out.data[i] = 0.0;
  }
  return out;
}

OptimizerState OptimizerState::init(const std::vector<const Tensor*>& params,
                                    const AdamConfig& config) {
  OptimizerState state;
  state.config = config;
  for (const Tensor* p : params) {
    state.m.emplace_back(p->shape);
    state.v.emplace_back(p->shape);
  }
  return state;
}

void adam_step(std::vector<Tensor*>& params,
               const std::vector<const Tensor*>& grads, OptimizerState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient count mismatch");
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    if (!p.same_shape(g)) {
      throw std::invalid_argument("adam_step: shape mismatch at parameter " +
                                  std::to_string(i));
    }
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t j = 0; j < p.data.size(); ++j) {
      const double gj = g.data[j];
      if (!std::isfinite(gj)) {
        throw std::runtime_error("adam_step: non-finite gradient in parameter " +
                                 std::to_string(i));
      }
      m.data[j] = c.beta1 * m.data[j] + (1.0 - c.beta1) * gj;
      v.data[j] = c.beta2 * v.data[j] + (1.0 - c.beta2) * gj * gj;
      const double m_hat = m.data[j] / bc1;
      const double v_hat = v.data[j] / bc2;
      p.data[j] -= c.lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

double grad_check(const std::function<double(const std::vector<Tensor>&)>& f,
                  const std::vector<Tensor>& point,
                  const std::vector<Tensor>& analytic_grad, double step,
                  double ignore_below) {
  if (point.size() != analytic_grad.size()) {
    throw std::invalid_argument("grad_check: gradient count mismatch");
  }
  double worst = 0.0;
  std::vector<Tensor> probe = point;
  for (std::size_t t = 0; t < probe.size(); ++t) {
    for (std::size_t j = 0; j < probe[t].data.size(); ++j) {
      const double saved = probe[t].data[j];
      probe[t].data[j] = saved + step;
      const double fp = f(probe);
      probe[t].data[j] = saved - step;
      const double fm = f(probe);
      probe[t].data[j] = saved;
      const double numeric = (fp - fm) / (2.0 * step);
      const double analytic = analytic_grad[t].data[j];
      const double scale = std::max(std::abs(numeric), std::abs(analytic));
      double err;
      if (scale < ignore_below) {
        err = std::abs(numeric - analytic);
      } else {
        err = std::abs(numeric - analytic) / scale;
      }
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace iterdet
