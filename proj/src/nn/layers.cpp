#include "avdoa/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "avdoa/error.hpp"

namespace avdoa::nn {

namespace {

// Four independent partial sums so the loop vectorizes; the summation order
// is fixed, so results stay reproducible.
double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  for (; k < n; ++k) s0 += a[k] * b[k];
  return (s0 + s1) + (s2 + s3);
}

}  // namespace

Dense::Dense(std::size_t in, std::size_t out)
    : weight(out, in), bias(1, out), grad_weight(out, in), grad_bias(1, out) {}

void Dense::init(Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in() + out()));
  for (double& w : weight.data()) w = rng.uniform(-limit, limit);
  bias.fill(0.0);
}

Tensor Dense::forward(const Tensor& x) const {
  require(x.cols() == in(), ErrorCode::ShapeMismatch,
          "dense input has " + std::to_string(x.cols()) + " features, expected " + std::to_string(in()));
  Tensor y(x.rows(), out());
  const std::size_t n_in = in();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double* xr = x.row(r).data();
    double* yr = y.row(r).data();
    for (std::size_t o = 0; o < out(); ++o) {
      const double* wo = weight.row(o).data();
      yr[o] = dot(xr, wo, n_in) + bias(0, o);
    }
  }
  return y;
}

Tensor Dense::backward(const Tensor& x, const Tensor& dy) {
  require(x.cols() == in() && dy.cols() == out() && x.rows() == dy.rows(), ErrorCode::ShapeMismatch,
          "dense backward shapes");
  grad_weight.fill(0.0);
  grad_bias.fill(0.0);
  Tensor dx(x.rows(), in());
  const std::size_t n_in = in();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double* xr = x.row(r).data();
    const double* dyr = dy.row(r).data();
    double* dxr = dx.row(r).data();
    for (std::size_t o = 0; o < out(); ++o) {
      const double g = dyr[o];
      grad_bias(0, o) += g;
      if (g == 0.0) continue;
      double* gw = grad_weight.row(o).data();
      const double* wo = weight.row(o).data();
      for (std::size_t k = 0; k < n_in; ++k) {
        gw[k] += g * xr[k];
        dxr[k] += g * wo[k];
      }
    }
  }
  return dx;
}

BatchNorm::BatchNorm(std::size_t features)
    : gamma(features, 1.0),
      beta(features, 0.0),
      running_mean(features, 0.0),
      running_var(features, 1.0),
      grad_gamma(features, 0.0),
      grad_beta(features, 0.0) {}

Tensor BatchNorm::forward(const Tensor& x, Mode mode, BatchNormCache* cache) {
  if (mode == Mode::Eval) return forward_eval(x);
  require(x.cols() == features(), ErrorCode::ShapeMismatch, "batch norm feature count");
  require(x.rows() >= 2, ErrorCode::BatchTooSmall, "batch norm in train mode needs a batch of at least 2");

  const std::size_t n = x.rows(), f = features();
  std::vector<double> mean(f, 0.0), var(f, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < f; ++c) mean[c] += x(r, c);
  for (double& m : mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < f; ++c) {
      const double d = x(r, c) - mean[c];
      var[c] += d * d;
    }
  for (double& v : var) v /= static_cast<double>(n);

  BatchNormCache local;
  BatchNormCache& out_cache = cache ? *cache : local;
  out_cache.xhat = Tensor(n, f);
  out_cache.inv_std.resize(f);
  for (std::size_t c = 0; c < f; ++c) out_cache.inv_std[c] = 1.0 / std::sqrt(var[c] + epsilon);

  Tensor y(n, f);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < f; ++c) {
      const double xh = (x(r, c) - mean[c]) * out_cache.inv_std[c];
      out_cache.xhat(r, c) = xh;
      y(r, c) = gamma[c] * xh + beta[c];
    }

  const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
  for (std::size_t c = 0; c < f; ++c) {
    running_mean[c] = (1.0 - momentum) * running_mean[c] + momentum * mean[c];
    running_var[c] = (1.0 - momentum) * running_var[c] + momentum * var[c] * unbias;
  }
  return y;
}

Tensor BatchNorm::forward_eval(const Tensor& x) const {
  require(x.cols() == features(), ErrorCode::ShapeMismatch, "batch norm feature count");
  Tensor y(x.rows(), x.cols());
  for (std::size_t c = 0; c < features(); ++c) {
    const double inv_std = 1.0 / std::sqrt(running_var[c] + epsilon);
    for (std::size_t r = 0; r < x.rows(); ++r) y(r, c) = gamma[c] * (x(r, c) - running_mean[c]) * inv_std + beta[c];
  }
  return y;
}

Tensor BatchNorm::backward(const BatchNormCache& cache, const Tensor& dy) {
  require_same_shape(cache.xhat, dy, "batch norm backward");
  const std::size_t n = dy.rows(), f = features();
  std::fill(grad_gamma.begin(), grad_gamma.end(), 0.0);
  std::fill(grad_beta.begin(), grad_beta.end(), 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < f; ++c) {
      grad_gamma[c] += dy(r, c) * cache.xhat(r, c);
      grad_beta[c] += dy(r, c);
    }
  // dx = inv_std / N * (N dxhat - sum(dxhat) - xhat * sum(dxhat * xhat)), dxhat = gamma dy.
  Tensor dx(n, f);
  const double count = static_cast<double>(n);
  for (std::size_t c = 0; c < f; ++c) {
    const double sum_dxhat = gamma[c] * grad_beta[c];
    const double sum_dxhat_xhat = gamma[c] * grad_gamma[c];
    for (std::size_t r = 0; r < n; ++r) {
      const double dxhat = gamma[c] * dy(r, c);
      dx(r, c) = cache.inv_std[c] / count * (count * dxhat - sum_dxhat - cache.xhat(r, c) * sum_dxhat_xhat);
    }
  }
  return dx;
}

Tensor relu_forward(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
  require_same_shape(x, dy, "relu backward");
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i)
    if (!(x.data()[i] > 0.0)) dx.data()[i] = 0.0;
  return dx;
}

Tensor sigmoid_forward(const Tensor& x) {
  // Saturated outputs are pulled back inside (0, 1) so downstream code never
  // sees an exact 0 or 1.
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2;
  Tensor y = x;
  for (double& v : y.data()) {
    // Split by sign so exp() never overflows.
    if (v >= 0.0) {
      v = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      v = e / (1.0 + e);
    }
    v = std::clamp(v, lo, hi);
  }
  return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& dy) {
  require_same_shape(y, dy, "sigmoid backward");
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) dx.data()[i] *= y.data()[i] * (1.0 - y.data()[i]);
  return dx;
}

Tensor softmax_forward(const Tensor& x) {
  Tensor y(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto in = x.row(r);
    auto out = y.row(r);
    const double peak = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) sum += out[c] = std::exp(in[c] - peak);
    for (double& v : out) v /= sum;
  }
  return y;
}

Tensor softmax_backward(const Tensor& y, const Tensor& dy) {
  require_same_shape(y, dy, "softmax backward");
  Tensor dx(y.rows(), y.cols());
  for (std::size_t r = 0; r < y.rows(); ++r) {
    double dot = 0.0;
    for (std::size_t c = 0; c < y.cols(); ++c) dot += y(r, c) * dy(r, c);
    for (std::size_t c = 0; c < y.cols(); ++c) dx(r, c) = y(r, c) * (dy(r, c) - dot);
  }
  return dx;
}

LossResult mse_loss(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "mse loss");
  require(!pred.empty(), ErrorCode::ShapeMismatch, "mse loss on empty tensors");
  LossResult out{0.0, Tensor(pred.rows(), pred.cols())};
  const double count = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.data()[i] - target.data()[i];
    out.loss += d * d;
    out.grad.data()[i] = 2.0 * d / count;
  }
  out.loss /= count;
  return out;
}

}  // namespace avdoa::nn
