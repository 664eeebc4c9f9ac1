#pragma once

#include <span>
#include <vector>

namespace avdoa::nn {

inline constexpr double kDefaultTargetSigmaDeg = 8.0;

// 360-class soft target: entry i (azimuth i - 180) is
// max over sources of exp(-d^2 / sigma^2), d the circular distance.
std::vector<double> encode_target(std::span<const double> doas_deg, double sigma_deg = kDefaultTargetSigmaDeg);

}  // namespace avdoa::nn
