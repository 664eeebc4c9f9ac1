#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "avdoa/audio.hpp"
#include "avdoa/fft.hpp"
#include "avdoa/geom.hpp"

namespace avdoa {

struct LagRange {
  int min = -25;
  int max = 25;

  std::size_t count() const { return static_cast<std::size_t>(max - min + 1); }
};

inline constexpr std::size_t kDefaultFftLength = 8192;

// P x L matrix, one row per unordered microphone pair (l < p) in
// lexicographic order, columns ordered tau = lags.min ... lags.max.
struct GccFeature {
  std::size_t pairs = 0;
  LagRange lags{};
  double sample_rate = 48000.0;
  std::vector<double> values;

  std::span<const double> row(std::size_t pair) const {
    return std::span<const double>(values).subspan(pair * lags.count(), lags.count());
  }
};

std::vector<std::array<std::size_t, 2>> mic_pairs(std::size_t num_mics);

// GCC-PHAT with a reusable FFT plan. Each whitened cross-spectrum bin has
// unit magnitude, so the lag-tau value is the mean over contributing bins of
// Re(e^{j(phase_l - phase_p)} e^{j 2 pi k tau / N}); identical inputs give 1
// at tau = 0. When channel p lags channel l by d samples the peak is at -d.
class GccPhat {
 public:
  explicit GccPhat(std::size_t fft_len = kDefaultFftLength, LagRange lags = {});

  std::size_t fft_length() const { return fft_.size(); }
  LagRange lags() const { return lags_; }

  std::vector<double> pair(std::span<const double> frame_l, std::span<const double> frame_p);
  GccFeature feature(const MultichannelFrame& frame);

 private:
  void cross(std::span<const std::complex<double>> sl, std::span<const std::complex<double>> sp,
             std::span<double> out);

  RealFft fft_;
  LagRange lags_;
  std::vector<std::complex<double>> cross_;
  std::vector<double> time_;
};

std::vector<double> gcc_phat_pair(std::span<const double> frame_l, std::span<const double> frame_p,
                                  LagRange lags = {}, std::size_t fft_len = kDefaultFftLength);

GccFeature gcc_feature(const MultichannelFrame& frame, LagRange lags = {}, std::size_t fft_len = kDefaultFftLength);

// Score per integer azimuth; index i <-> azimuth i - 180.
struct SrpMap {
  std::array<double, 360> scores{};
};

// Expected GCC peak lag (samples, fractional) of pair (l, p) for a far-field
// source at `azimuth_deg`, consistent with GccPhat's sign convention.
double expected_pair_lag(const MicArray& array, std::size_t l, std::size_t p, double azimuth_deg,
                         double sample_rate);

SrpMap srp_phat(const GccFeature& feature, const MicArray& array);

std::vector<double> decode_srp(const SrpMap& map, std::size_t n_sources, double min_separation_deg = 10.0);

}  // namespace avdoa
