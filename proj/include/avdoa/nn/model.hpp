#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "avdoa/nn/adam.hpp"
#include "avdoa/nn/layers.hpp"
#include "avdoa/nn/tensor.hpp"

namespace avdoa::nn {

// Values are the checkpoint architecture tags.
enum class ModelKind : std::uint8_t { Avc = 0, Avaw = 1, GccOnly = 2 };

const char* to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

struct ModelConfig {
  ModelKind kind = ModelKind::Avc;
  std::size_t gcc_dim = 306;
  std::size_t vis_dim = 102;
  std::vector<std::size_t> hidden = {1000, 1000, 1000};
  std::size_t weight_hidden = 64;
  std::size_t outputs = 360;

  // Width of the trunk input.
  std::size_t trunk_input() const { return kind == ModelKind::GccOnly ? gcc_dim : gcc_dim + vis_dim; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct ModelOutput {
  Tensor posterior;  // batch x outputs, sigmoid
  Tensor weights;    // batch x 3 (audio, u, v) for AVAW, empty otherwise
};

// MLP3 trunk: [Dense -> BatchNorm -> ReLU] per hidden width, then
// Dense -> sigmoid. AVC feeds it concat(gcc, vis); GCC-only feeds gcc alone;
// AVAW first runs a weight net (Dense -> ReLU -> Dense(3) -> softmax) on
// concat(gcc, vis) and scales the gcc block, the u row and the v row by the
// three weights before the trunk.
class Network {
 public:
  Network() = default;
  Network(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }

  // Keeps activations for backward(); train mode also updates BN running stats.
  ModelOutput forward(const Tensor& gcc, const Tensor& vis, Mode mode);

  // Eval-mode forward without touching any state; safe to call concurrently.
  ModelOutput predict(const Tensor& gcc, const Tensor& vis) const;

  // Gradient of the loss w.r.t. the last forward()'s posterior. Fills the
  // per-layer gradients exposed through parameters().
  void backward(const Tensor& d_posterior);

  // Trainable tensors in declaration order: weight net (AVAW only), then per
  // hidden layer dense weight, bias, BN gamma, beta, then the output layer.
  std::vector<ParamRef> parameters();

  std::vector<Dense>& weight_net() { return weight_net_; }
  std::vector<Dense>& trunk_dense() { return dense_; }
  std::vector<BatchNorm>& trunk_norm() { return norm_; }
  const std::vector<Dense>& weight_net() const { return weight_net_; }
  const std::vector<Dense>& trunk_dense() const { return dense_; }
  const std::vector<BatchNorm>& trunk_norm() const { return norm_; }

 private:
  struct Cache {
    Tensor input;         // concat(gcc, vis) or gcc
    Tensor wn_pre;        // weight-net hidden pre-activation
    Tensor wn_hidden;     // after ReLU
    Tensor weights;       // softmax output
    std::vector<Tensor> dense_in;
    std::vector<BatchNormCache> bn;
    std::vector<Tensor> bn_out;  // pre-ReLU
    Tensor posterior;
    Mode mode = Mode::Eval;
  };

  ModelOutput run(const Tensor& gcc, const Tensor& vis, Mode mode, Cache* cache);
  ModelOutput run_eval(const Tensor& gcc, const Tensor& vis) const;
  Tensor trunk_input(const Tensor& gcc, const Tensor& vis) const;
  Tensor scale_blocks(const Tensor& input, const Tensor& weights) const;

  ModelConfig config_;
  std::vector<Dense> weight_net_;
  std::vector<Dense> dense_;
  std::vector<BatchNorm> norm_;
  std::optional<Cache> cache_;
};

}  // namespace avdoa::nn
