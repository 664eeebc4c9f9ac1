#pragma once

#include <vector>

#include "avdoa/nn/tensor.hpp"
#include "avdoa/rng.hpp"

namespace avdoa::nn {

enum class Mode { Train, Eval };

// y = x W^T + b. Gradients from the last backward() call are kept in
// grad_weight / grad_bias (overwritten, not accumulated).
struct Dense {
  Tensor weight;  // out x in
  Tensor bias;    // 1 x out
  Tensor grad_weight;
  Tensor grad_bias;

  Dense() = default;
  Dense(std::size_t in, std::size_t out);

  std::size_t in() const { return weight.cols(); }
  std::size_t out() const { return weight.rows(); }

  // Glorot-uniform weights, zero bias.
  void init(Rng& rng);

  Tensor forward(const Tensor& x) const;
  // Needs the forward input `x`; returns dL/dx.
  Tensor backward(const Tensor& x, const Tensor& dy);
};

struct BatchNormCache {
  Tensor xhat;
  std::vector<double> inv_std;
};

struct BatchNorm {
  std::vector<double> gamma, beta;
  std::vector<double> running_mean, running_var;
  std::vector<double> grad_gamma, grad_beta;
  double momentum = 0.1;
  double epsilon = 1e-5;

  BatchNorm() = default;
  explicit BatchNorm(std::size_t features);

  std::size_t features() const { return gamma.size(); }

  // Train mode normalizes with batch statistics (biased variance) and
  // blends them into the running statistics (unbiased variance); eval mode
  // uses the running statistics. Train mode requires a batch of >= 2.
  Tensor forward(const Tensor& x, Mode mode, BatchNormCache* cache = nullptr);
  Tensor forward_eval(const Tensor& x) const;
  Tensor backward(const BatchNormCache& cache, const Tensor& dy);
};

Tensor relu_forward(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& dy);

Tensor sigmoid_forward(const Tensor& x);
// Takes the forward output y.
Tensor sigmoid_backward(const Tensor& y, const Tensor& dy);

// Row-wise, max-shifted.
Tensor softmax_forward(const Tensor& x);
Tensor softmax_backward(const Tensor& y, const Tensor& dy);

struct LossResult {
  double loss = 0.0;
  Tensor grad;
};

// Mean over every element of (pred - target)^2.
LossResult mse_loss(const Tensor& pred, const Tensor& target);

}  // namespace avdoa::nn
