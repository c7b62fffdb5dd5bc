#include <doctest.h>

#include <cmath>

#include "iterdet/nn.hpp"

using namespace iterdet;

namespace {

ConvLayer layer_from(std::vector<int> wshape, std::vector<double> w,
                     std::vector<double> b, int stride, int padding) {
  ConvLayer layer;
  layer.weights = Tensor(std::move(wshape), std::move(w));
  layer.bias = Tensor({static_cast<int>(b.size())}, std::move(b));
  layer.stride = stride;
  layer.padding = padding;
  return layer;
}

Tensor random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.uniform(-scale, scale);
  return t;
}

}  // namespace

TEST_CASE("conv2d identity kernel") {
  Tensor input({1, 1, 1}, {5.0});
  ConvLayer layer = layer_from({1, 1, 1, 1}, {1.0}, {0.0}, 1, 0);
  Tensor out = conv2d_forward(input, layer);
  CHECK(out.shape == std::vector<int>{1, 1, 1});
  CHECK(out.data[0] == 5.0);
}

TEST_CASE("conv2d 2x2 all-ones filter") {
  // make_conv only hands out odd kernels; the forward map itself is
  // kernel-size agnostic, checked here against a nested-loop value.
  Tensor input({1, 2, 2}, {1, 2, 3, 4});
  ConvLayer layer =
      layer_from({1, 1, 2, 2}, std::vector<double>(4, 1.0), {0.0}, 1, 0);
  Tensor out = conv2d_forward(input, layer);
  CHECK(out.shape == std::vector<int>{1, 1, 1});
  CHECK(out.data[0] == doctest::Approx(10.0));
}

TEST_CASE("conv2d zero weights give constant bias map") {
  Rng rng(3);
  Tensor input = random_tensor({2, 5, 7}, rng);
  ConvLayer layer = make_zero_conv(3, 2, 3, 1, 1);
  layer.bias.data = {0.5, -1.0, 2.0};
  Tensor out = conv2d_forward(input, layer);
  CHECK(out.shape == std::vector<int>{3, 5, 7});
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 5; ++y) {
      for (int x = 0; x < 7; ++x) {
        CHECK(out.at3(c, y, x) == layer.bias.data[c]);
      }
    }
  }
}

TEST_CASE("conv2d output geometry with stride and padding") {
  Rng rng(4);
  Tensor input = random_tensor({1, 11, 9}, rng);
  ConvLayer layer = make_conv(2, 1, 3, 2, 1, rng);
  Tensor out = conv2d_forward(input, layer);
  CHECK(out.shape == std::vector<int>{2, 6, 5});
}

TEST_CASE("conv2d shape mismatch errors name the dimensions") {
  Rng rng(5);
  Tensor input = random_tensor({2, 4, 4}, rng);
  ConvLayer layer = make_conv(1, 3, 3, 1, 1, rng);
  CHECK_THROWS_WITH_AS(conv2d_forward(input, layer),
                       doctest::Contains("channels"), std::invalid_argument);
  Tensor tiny = random_tensor({3, 1, 1}, rng);
  ConvLayer big = make_conv(1, 3, 5, 1, 0, rng);
  CHECK_THROWS_AS(conv2d_forward(tiny, big), std::invalid_argument);
}

TEST_CASE("conv2d is linear in its input") {
  Rng rng(6);
  ConvLayer layer = make_conv(2, 2, 3, 1, 1, rng);
  layer.bias = Tensor({2});  // linearity holds for the bias-free map
  Tensor x = random_tensor({2, 6, 6}, rng);
  Tensor y = random_tensor({2, 6, 6}, rng);
  const double a = 0.7, b = -1.3;
  Tensor combo({2, 6, 6});
  for (std::size_t i = 0; i < combo.data.size(); ++i) {
    combo.data[i] = a * x.data[i] + b * y.data[i];
  }
  Tensor fx = conv2d_forward(x, layer);
  Tensor fy = conv2d_forward(y, layer);
  Tensor fc = conv2d_forward(combo, layer);
  for (std::size_t i = 0; i < fc.data.size(); ++i) {
    CHECK(fc.data[i] ==
          doctest::Approx(a * fx.data[i] + b * fy.data[i]).epsilon(1e-10));
  }
}

TEST_CASE("conv2d backward: zero upstream gives zero gradients") {
  Rng rng(8);
  Tensor input = random_tensor({1, 4, 4}, rng);
  ConvLayer layer = make_conv(1, 1, 3, 1, 1, rng);
  Tensor upstream({1, 4, 4});
  ConvGrads grads = conv2d_backward(input, layer, upstream);
  for (double v : grads.input.data) CHECK(v == 0.0);
  for (double v : grads.weights.data) CHECK(v == 0.0);
  for (double v : grads.bias.data) CHECK(v == 0.0);
}

TEST_CASE("conv2d backward: identity kernel passes upstream through") {
  Tensor input({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  ConvLayer layer = layer_from({1, 1, 1, 1}, {1.0}, {0.0}, 1, 0);
  Tensor upstream({1, 3, 3}, {9, 8, 7, 6, 5, 4, 3, 2, 1});
  ConvGrads grads = conv2d_backward(input, layer, upstream);
  CHECK(grads.input.data == upstream.data);
}

TEST_CASE("conv2d backward matches finite differences") {
  Rng rng(9);
  Tensor input = random_tensor({1, 4, 4}, rng);
  ConvLayer layer = make_conv(2, 1, 3, 1, 1, rng);
  Tensor upstream = random_tensor({2, 4, 4}, rng);

  // Scalar objective: <upstream, conv(input)>; its gradients equal the
  // conv2d_backward outputs.
  auto objective = [&](const std::vector<Tensor>& point) {
    ConvLayer probe = layer;
    probe.weights = point[1];
    probe.bias = point[2];
    Tensor out = conv2d_forward(point[0], probe);
    double acc = 0.0;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
      acc += out.data[i] * upstream.data[i];
    }
    return acc;
  };
  ConvGrads grads = conv2d_backward(input, layer, upstream);
  const double err = grad_check(
      objective, {input, layer.weights, layer.bias},
      {grads.input, grads.weights, grads.bias}, 1e-6);
  CHECK(err < 1e-5);
}

TEST_CASE("conv2d backward rejects wrong upstream shape") {
  Rng rng(10);
  Tensor input = random_tensor({1, 4, 4}, rng);
  ConvLayer layer = make_conv(1, 1, 3, 1, 1, rng);
  CHECK_THROWS_AS(conv2d_backward(input, layer, Tensor({1, 3, 3})),
                  std::invalid_argument);
}

TEST_CASE("relu forward and backward") {
  Tensor x({3}, {-1.0, 0.0, 2.0});
  Tensor out = relu_forward(x);
  CHECK(out.data == std::vector<double>{0.0, 0.0, 2.0});

  Tensor x2({2}, {-1.0, 2.0});
  Tensor up({2}, {5.0, 5.0});
  Tensor back = relu_backward(x2, up);
  CHECK(back.data == std::vector<double>{0.0, 5.0});
}

TEST_CASE("relu gradient matches finite differences away from zero") {
  Rng rng(12);
  Tensor x = random_tensor({20}, rng);
  const double step = 1e-6;
  // Objective: sum(relu(x)).
  auto objective = [](const std::vector<Tensor>& point) {
    Tensor out = relu_forward(point[0]);
    double acc = 0.0;
    for (double v : out.data) acc += v;
    return acc;
  };
  Tensor ones({20}, std::vector<double>(20, 1.0));
  Tensor analytic = relu_backward(x, ones);
  // Mask coordinates near the kink.
  std::vector<Tensor> point = {x};
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    if (std::abs(x.data[i]) <= 10 * step) continue;
    Tensor probe = x;
    probe.data[i] += step;
    const double fp = objective({probe});
    probe.data[i] -= 2 * step;
    const double fm = objective({probe});
    const double numeric = (fp - fm) / (2 * step);
    CHECK(std::abs(numeric - analytic.data[i]) < 1e-5);
  }
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
  Rng rng(14);
  Tensor p = random_tensor({5}, rng);
  const Tensor original = p;
  Tensor g({5});
  std::vector<Tensor*> params = {&p};
  std::vector<const Tensor*> grads = {&g};
  OptimizerState state = OptimizerState::init({&p}, {});
  for (int i = 0; i < 10; ++i) adam_step(params, grads, state);
  CHECK(p.data == original.data);
}

TEST_CASE("adam: constant gradient moves opposite its sign") {
  Tensor p({1}, {0.0});
  Tensor g({1}, {2.5});
  std::vector<Tensor*> params = {&p};
  std::vector<const Tensor*> grads = {&g};
  OptimizerState state = OptimizerState::init({&p}, {});
  for (int i = 0; i < 100; ++i) adam_step(params, grads, state);
  CHECK(p.data[0] < 0.0);
}

TEST_CASE("adam: bias-corrected first step magnitude") {
  // Hand evaluation of the recurrence: m_hat = g, v_hat = g^2, so the
  // first update is lr * g / (|g| + eps) = lr for g = 1.
  Tensor p({1}, {0.0});
  Tensor g({1}, {1.0});
  std::vector<Tensor*> params = {&p};
  std::vector<const Tensor*> grads = {&g};
  AdamConfig config;
  config.lr = 1e-4;
  OptimizerState state = OptimizerState::init({&p}, config);
  adam_step(params, grads, state);
  CHECK(p.data[0] == doctest::Approx(-1e-4).epsilon(1e-6));
}

TEST_CASE("adam rejects non-finite gradients") {
  Tensor p({1}, {0.0});
  Tensor g({1}, {std::nan("")});
  std::vector<Tensor*> params = {&p};
  std::vector<const Tensor*> grads = {&g};
  OptimizerState state = OptimizerState::init({&p}, {});
  CHECK_THROWS_AS(adam_step(params, grads, state), std::runtime_error);
}

TEST_CASE("grad_check on sum and constant functions") {
  Rng rng(15);
  Tensor x = random_tensor({7}, rng);

  auto sum = [](const std::vector<Tensor>& point) {
    double acc = 0.0;
    for (double v : point[0].data) acc += v;
    return acc;
  };
  Tensor ones({7}, std::vector<double>(7, 1.0));
  CHECK(grad_check(sum, {x}, {ones}, 1e-6) < 1e-8);

  auto constant = [](const std::vector<Tensor>&) { return 3.0; };
  Tensor zeros({7});
  CHECK(grad_check(constant, {x}, {zeros}, 1e-6) == 0.0);
}

TEST_CASE("glorot init stays within the fan bound") {
  Rng rng(16);
  ConvLayer layer = make_conv(4, 3, 3, 1, 1, rng);
  const double limit = std::sqrt(6.0 / (3 * 9 + 4 * 9));
  for (double w : layer.weights.data) {
    CHECK(std::abs(w) <= limit);
  }
  for (double b : layer.bias.data) CHECK(b == 0.0);
}
