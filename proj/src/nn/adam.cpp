#include "avdoa/nn/adam.hpp"

#include <cmath>

#include "avdoa/error.hpp"

namespace avdoa::nn {

void Adam::step(std::span<const ParamRef> params) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.value.size(), 0.0);
      v_.emplace_back(p.value.size(), 0.0);
    }
  }
  require(m_.size() == params.size(), ErrorCode::ShapeMismatch, "Adam parameter list changed");
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    require(p.value.size() == m_[i].size() && p.grad.size() == p.value.size(), ErrorCode::ShapeMismatch,
            "Adam parameter shape");
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad[k];
      m[k] = b1 * m[k] + (1.0 - b1) * g;
      v[k] = b2 * v[k] + (1.0 - b2) * g * g;
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      p.value[k] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace avdoa::nn
