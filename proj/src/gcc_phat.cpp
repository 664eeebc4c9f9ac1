#include "avdoa/gcc_phat.hpp"

#include <cmath>

#include "avdoa/error.hpp"
#include "avdoa/eval.hpp"

namespace avdoa {

namespace {
constexpr double kMagnitudeFloor = 1e-12;
}

std::vector<std::array<std::size_t, 2>> mic_pairs(std::size_t num_mics) {
  std::vector<std::array<std::size_t, 2>> out;
  for (std::size_t l = 0; l < num_mics; ++l)
    for (std::size_t p = l + 1; p < num_mics; ++p) out.push_back({l, p});
  return out;
}

GccPhat::GccPhat(std::size_t fft_len, LagRange lags)
    : fft_(fft_len), lags_(lags), cross_(fft_.bins()), time_(fft_len) {
  require(lags.min <= lags.max, ErrorCode::InvalidArgument, "empty lag range");
  require(static_cast<std::size_t>(std::max(-lags.min, lags.max)) < fft_len / 2, ErrorCode::InvalidArgument,
          "lag range exceeds half the FFT length");
}

void GccPhat::cross(std::span<const std::complex<double>> sl, std::span<const std::complex<double>> sp,
                    std::span<double> out) {
  const std::size_t n = fft_.size();
  const std::size_t nyquist = n / 2;
  std::size_t contributing = 0;
  for (std::size_t k = 0; k < cross_.size(); ++k) {
    const std::complex<double> c = sl[k] * std::conj(sp[k]);
    const double mag = std::abs(c);
    if (mag < kMagnitudeFloor) {
      cross_[k] = 0.0;
      continue;
    }
    cross_[k] = c / mag;
    // Interior bins stand for themselves and their conjugate mirror.
    contributing += (k == 0 || k == nyquist) ? 1 : 2;
  }
  if (contributing == 0) throw Error(ErrorCode::AllZeroSpectrum, "every cross-spectrum bin vanished");
  fft_.inverse(cross_, time_);
  const double scale = 1.0 / static_cast<double>(contributing);
  std::size_t i = 0;
  for (int tau = lags_.min; tau <= lags_.max; ++tau, ++i) {
    const std::size_t idx = tau >= 0 ? static_cast<std::size_t>(tau) : n - static_cast<std::size_t>(-tau);
    out[i] = time_[idx] * scale;
  }
}

std::vector<double> GccPhat::pair(std::span<const double> frame_l, std::span<const double> frame_p) {
  require(frame_l.size() == frame_p.size(), ErrorCode::ShapeMismatch, "frames differ in length");
  require(frame_l.size() <= fft_.size(), ErrorCode::InvalidArgument, "frame longer than FFT length");
  std::vector<std::complex<double>> sl(fft_.bins()), sp(fft_.bins());
  fft_.forward(frame_l, sl);
  fft_.forward(frame_p, sp);
  std::vector<double> out(lags_.count());
  cross(sl, sp, out);
  return out;
}

GccFeature GccPhat::feature(const MultichannelFrame& frame) {
  frame.validate();
  require(frame.num_channels() >= 2, ErrorCode::InvalidArgument, "need at least two channels");
  require(frame.length() <= fft_.size(), ErrorCode::InvalidArgument, "frame longer than FFT length");

  std::vector<std::vector<std::complex<double>>> spectra(frame.num_channels(),
                                                         std::vector<std::complex<double>>(fft_.bins()));
  for (std::size_t c = 0; c < frame.num_channels(); ++c) fft_.forward(frame.channels[c], spectra[c]);

  const auto pairs = mic_pairs(frame.num_channels());
  GccFeature out;
  out.pairs = pairs.size();
  out.lags = lags_;
  out.sample_rate = frame.sample_rate;
  out.values.resize(pairs.size() * lags_.count());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    cross(spectra[pairs[i][0]], spectra[pairs[i][1]],
          std::span<double>(out.values).subspan(i * lags_.count(), lags_.count()));
  }
  return out;
}

std::vector<double> gcc_phat_pair(std::span<const double> frame_l, std::span<const double> frame_p, LagRange lags,
                                  std::size_t fft_len) {
  GccPhat gcc(fft_len, lags);
  return gcc.pair(frame_l, frame_p);
}

GccFeature gcc_feature(const MultichannelFrame& frame, LagRange lags, std::size_t fft_len) {
  GccPhat gcc(fft_len, lags);
  return gcc.feature(frame);
}

double expected_pair_lag(const MicArray& array, std::size_t l, std::size_t p, double azimuth_deg,
                         double sample_rate) {
  const auto tau = far_field_delays(array, azimuth_deg);
  return (tau[l] - tau[p]) * sample_rate;
}

SrpMap srp_phat(const GccFeature& feature, const MicArray& array) {
  array.validate();
  const auto pairs = mic_pairs(array.size());
  require(pairs.size() == feature.pairs, ErrorCode::ShapeMismatch, "feature pair count does not match array");
  require(feature.values.size() == feature.pairs * feature.lags.count(), ErrorCode::ShapeMismatch,
          "feature value count");
  const double max_lag = array.aperture() / array.speed_of_sound * feature.sample_rate;
  require(max_lag <= static_cast<double>(std::min(-feature.lags.min, feature.lags.max)),
          ErrorCode::LagRangeTooSmall, "lag range does not cover the array aperture");

  SrpMap map;
  for (std::size_t i = 0; i < 360; ++i) {
    const double az = class_to_azimuth(i);
    const auto tau = far_field_delays(array, az);
    double score = 0.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const double lag = (tau[pairs[k][0]] - tau[pairs[k][1]]) * feature.sample_rate;
      const auto row = feature.row(k);
      const double pos = lag - feature.lags.min;
      const double lo = std::floor(pos);
      const auto idx = static_cast<std::size_t>(lo);
      const double frac = pos - lo;
      const double v = idx + 1 < row.size() ? row[idx] * (1.0 - frac) + row[idx + 1] * frac : row[idx];
      score += v;
    }
    map.scores[i] = score;
  }
  return map;
}

std::vector<double> decode_srp(const SrpMap& map, std::size_t n_sources, double min_separation_deg) {
  return decode_doa(map.scores, n_sources, min_separation_deg);
}

}  // namespace avdoa
