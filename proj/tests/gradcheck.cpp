#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "avdoa/nn/layers.hpp"
#include "avdoa/rng.hpp"
#include "oracles.hpp"

using namespace avdoa;
using namespace avdoa::nn;

namespace gradcheck {

namespace {

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Tensor t(r, c);
  for (auto& v : t.data()) v = scale * rng.normal();
  return t;
}

// Weighted sum of the output against fixed random coefficients: a scalar
// whose gradient w.r.t. the output is exactly `coef`.
double project(const Tensor& y, const Tensor& coef) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y.data()[i] * coef.data()[i];
  return s;
}

// Random inputs kept at least `margin` away from zero (ReLU's kink).
Tensor away_from_zero(std::size_t r, std::size_t c, Rng& rng, double margin) {
  Tensor t = random_tensor(r, c, rng);
  for (auto& v : t.data())
    if (std::fabs(v) < margin) v = v < 0 ? v - margin : v + margin;
  return t;
}

template <typename Fwd, typename Bwd>
double elementwise(Tensor x, Rng& rng, Fwd fwd, Bwd bwd, double h) {
  const Tensor coef = random_tensor(x.rows(), x.cols(), rng);
  const Tensor dx = bwd(x, fwd(x), coef);
  const auto num = oracle::numeric_gradient([&] { return project(fwd(x), coef); }, x.data(), h);
  return oracle::max_relative_error(dx.data(), num);
}

}  // namespace

double dense(std::uint64_t seed, std::size_t batch, std::size_t in, std::size_t out) {
  Rng rng(seed);
  Dense layer(in, out);
  layer.init(rng);
  for (auto& b : layer.bias.data()) b = rng.normal();
  Tensor x = random_tensor(batch, in, rng);
  const Tensor coef = random_tensor(batch, out, rng);
  auto f = [&] { return project(layer.forward(x), coef); };

  // Linear in each argument, so any step is exact up to round-off.
  constexpr double kStep = 1e-2;
  const Tensor dx = layer.backward(x, coef);
  double worst = oracle::max_relative_error(dx.data(), oracle::numeric_gradient(f, x.data(), kStep));
  worst = std::max(worst, oracle::max_relative_error(layer.grad_weight.data(), oracle::numeric_gradient(f, layer.weight.data(), kStep)));
  worst = std::max(worst, oracle::max_relative_error(layer.grad_bias.data(), oracle::numeric_gradient(f, layer.bias.data(), kStep)));
  return worst;
}

double batchnorm(std::uint64_t seed, std::size_t batch, std::size_t features) {
  Rng rng(seed);
  BatchNorm bn(features);
  for (std::size_t j = 0; j < features; ++j) {
    bn.gamma[j] = rng.uniform(0.5, 1.5);
    bn.beta[j] = rng.normal();
  }
  Tensor x = random_tensor(batch, features, rng, 2.0);
  const Tensor coef = random_tensor(batch, features, rng);
  auto f = [&] {
    BatchNorm copy = bn;
    return project(copy.forward(x, Mode::Train), coef);
  };

  BatchNorm work = bn;
  BatchNormCache cache;
  work.forward(x, Mode::Train, &cache);
  const Tensor dx = work.backward(cache, coef);
  double worst = oracle::max_relative_error(dx.data(), oracle::numeric_gradient(f, x.data(), 1e-3));
  worst = std::max(worst, oracle::max_relative_error(work.grad_gamma, oracle::numeric_gradient(f, bn.gamma, 1e-3)));
  worst = std::max(worst, oracle::max_relative_error(work.grad_beta, oracle::numeric_gradient(f, bn.beta, 1e-3)));
  return worst;
}

double relu(std::uint64_t seed) {
  Rng rng(seed);
  // The step must stay well inside the 1e-3 margin around the kink.
  return elementwise(away_from_zero(6, 7, rng, 1e-3), rng, relu_forward,
                     [](const Tensor& x, const Tensor&, const Tensor& dy) { return relu_backward(x, dy); }, 1e-5);
}

double sigmoid(std::uint64_t seed) {
  Rng rng(seed);
  return elementwise(random_tensor(6, 7, rng, 3.0), rng, sigmoid_forward,
                     [](const Tensor&, const Tensor& y, const Tensor& dy) { return sigmoid_backward(y, dy); }, 1e-3);
}

double softmax(std::uint64_t seed) {
  Rng rng(seed);
  return elementwise(random_tensor(5, 3, rng, 2.0), rng, softmax_forward,
                     [](const Tensor&, const Tensor& y, const Tensor& dy) { return softmax_backward(y, dy); }, 1e-3);
}

double mse(std::uint64_t seed) {
  Rng rng(seed);
  Tensor pred = random_tensor(4, 360, rng);
  const Tensor target = random_tensor(4, 360, rng);
  const LossResult r = mse_loss(pred, target);
  // Quadratic, so a large step has no truncation error and little round-off.
  const auto num = oracle::numeric_gradient([&] { return mse_loss(pred, target).loss; }, pred.data(), 1e-2);
  return oracle::max_relative_error(r.grad.data(), num);
}

namespace {

// Smallest |input| to any ReLU in a train-mode forward pass. Finite
// differences are only meaningful when no perturbation crosses a kink.
double relu_margin(Network& net, const Tensor& gcc, const Tensor& vis) {
  const ModelConfig& cfg = net.config();
  Tensor x(gcc.rows(), cfg.trunk_input());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::copy(gcc.row(r).begin(), gcc.row(r).end(), x.row(r).begin());
    if (cfg.kind != ModelKind::GccOnly) std::copy(vis.row(r).begin(), vis.row(r).end(), x.row(r).begin() + cfg.gcc_dim);
  }
  double margin = INFINITY;
  auto track = [&](const Tensor& t) {
    for (double v : t.data()) margin = std::min(margin, std::fabs(v));
  };
  if (cfg.kind == ModelKind::Avaw) {
    const Tensor pre = net.weight_net()[0].forward(x);
    track(pre);
    const Tensor w = softmax_forward(net.weight_net()[1].forward(relu_forward(pre)));
    const std::size_t row = cfg.vis_dim / 2;
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < x.cols(); ++c) x(r, c) *= w(r, c < cfg.gcc_dim ? 0 : (c < cfg.gcc_dim + row ? 1 : 2));
  }
  for (std::size_t i = 0; i < net.trunk_norm().size(); ++i) {
    BatchNorm bn = net.trunk_norm()[i];
    const Tensor z = bn.forward(net.trunk_dense()[i].forward(x), Mode::Train);
    track(z);
    x = relu_forward(z);
  }
  return margin;
}

}  // namespace

double network(ModelKind kind, std::uint64_t seed, std::size_t hidden, std::size_t batch, double h) {
  ModelConfig cfg;
  cfg.kind = kind;
  cfg.hidden = {hidden, hidden, hidden};
  Network net(cfg, seed);
  Rng rng(mix_seed(seed, 77));
  // Non-zero biases and BN shifts so every parameter has a generic gradient.
  for (auto& p : net.parameters())
    for (auto& v : p.value)
      if (v == 0.0) v = 0.1 * rng.normal();
  // Redraw inputs until every ReLU input is clear of the kink by a wide
  // multiple of the largest stencil step.
  Tensor gcc, vis(batch, cfg.vis_dim);
  for (int attempt = 0;; ++attempt) {
    gcc = random_tensor(batch, cfg.gcc_dim, rng, 0.3);
    for (auto& v : vis.data()) v = rng.uniform();
    if (relu_margin(net, gcc, vis) > 20 * h || attempt == 1000) break;
  }
  Tensor target(batch, cfg.outputs);
  for (auto& v : target.data()) v = rng.uniform();

  auto loss = [&] { return mse_loss(net.forward(gcc, vis, Mode::Train).posterior, target).loss; };
  const ModelOutput out = net.forward(gcc, vis, Mode::Train);
  net.backward(mse_loss(out.posterior, target).grad);

  double worst = 0.0;
  for (const ParamRef& p : net.parameters()) {
    const std::vector<double> analytic(p.grad.begin(), p.grad.end());
    const auto num = oracle::numeric_gradient(loss, p.value, h);
    worst = std::max(worst, oracle::max_relative_error(analytic, num));
  }
  return worst;
}

}  // namespace gradcheck
