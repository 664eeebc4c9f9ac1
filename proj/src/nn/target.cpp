#include "avdoa/nn/target.hpp"

#include <algorithm>
#include <cmath>

#include "avdoa/error.hpp"
#include "avdoa/eval.hpp"

namespace avdoa::nn {

std::vector<double> encode_target(std::span<const double> doas_deg, double sigma_deg) {
  require(sigma_deg > 0, ErrorCode::InvalidArgument, "target sigma must be positive");
  std::vector<double> target(kNumDoaClasses, 0.0);
  for (double doa : doas_deg) {
    require(doa >= -180.0 && doa < 180.0, ErrorCode::InvalidArgument, "azimuth outside [-180, 180)");
    for (std::size_t i = 0; i < kNumDoaClasses; ++i) {
      const double d = angular_error(class_to_azimuth(i), doa);
      target[i] = std::max(target[i], std::exp(-d * d / (sigma_deg * sigma_deg)));
    }
  }
  return target;
}

}  // namespace avdoa::nn
