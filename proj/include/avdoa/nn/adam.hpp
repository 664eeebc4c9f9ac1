#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace avdoa::nn {

struct ParamRef {
  std::span<double> value;
  std::span<const double> grad;
};

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias-corrected moments; moment buffers are sized lazily from the
// first parameter list and must see the same layout on every step.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(std::span<const ParamRef> params);

  std::uint64_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<std::vector<double>>& first_moment() const { return m_; }
  const std::vector<std::vector<double>>& second_moment() const { return v_; }

 private:
  AdamConfig config_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace avdoa::nn
