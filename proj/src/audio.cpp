#include "avdoa/audio.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "avdoa/error.hpp"
#include "avdoa/fft.hpp"
#include "avdoa/wav.hpp"

namespace avdoa {

namespace {
constexpr double kPi = std::numbers::pi;
}

void MultichannelSignal::validate() const {
  require(sample_rate > 0, ErrorCode::InvalidArgument, "sample rate must be positive");
  require(!channels.empty(), ErrorCode::InvalidArgument, "signal has no channels");
  for (const auto& ch : channels) {
    require(ch.size() == channels.front().size(), ErrorCode::ShapeMismatch, "channels differ in length");
  }
}

double MultichannelSignal::mean_power() const {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& ch : channels) {
    for (double s : ch) sum += s * s;
    count += ch.size();
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

SourceKind parse_source_kind(const std::string& name) {
  if (name == "white") return SourceKind::White;
  if (name == "speech_like_ar" || name == "speech") return SourceKind::SpeechLikeAr;
  if (name == "wav" || name == "wav_file") return SourceKind::WavFile;
  throw Error(ErrorCode::InvalidArgument, "unknown source kind '" + name + "'");
}

MonoSignal synth_source(SourceKind kind, double duration_s, double sample_rate, std::uint64_t seed,
                        const std::filesystem::path& wav_path) {
  require(sample_rate > 0, ErrorCode::InvalidArgument, "sample rate must be positive");
  require(duration_s > 0, ErrorCode::InvalidArgument, "duration must be positive");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  require(n > 0, ErrorCode::InvalidArgument, "duration shorter than one sample");

  MonoSignal out;
  out.sample_rate = sample_rate;
  out.samples.resize(n);
  Rng rng(seed);

  switch (kind) {
    case SourceKind::White:
      for (double& s : out.samples) s = rng.normal();
      break;
    case SourceKind::SpeechLikeAr: {
      // All-pole tilt (poles at 0.8 and 0.5) and a ~4 Hz syllabic envelope
      // that dips to 10% between syllables.
      const double a1 = 1.3, a2 = -0.4;
      const double rate = 3.0 + 2.0 * rng.uniform();
      const double phase = 2.0 * kPi * rng.uniform();
      double y1 = 0.0, y2 = 0.0, power = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double y = rng.normal() + a1 * y1 + a2 * y2;
        y2 = y1;
        y1 = y;
        const double t = static_cast<double>(i) / sample_rate;
        const double env = 0.1 + 0.9 * std::max(0.0, std::sin(2.0 * kPi * rate * t + phase));
        out.samples[i] = y * env;
        power += out.samples[i] * out.samples[i];
      }
      const double gain = 1.0 / std::sqrt(power / static_cast<double>(n));
      for (double& s : out.samples) s *= gain;
      break;
    }
    case SourceKind::WavFile: {
      const MultichannelSignal wav = read_wav(wav_path);
      require(wav.sample_rate == sample_rate, ErrorCode::SampleRateMismatch,
              wav_path.string() + " is not at the requested sample rate");
      require(wav.length() >= n, ErrorCode::TooShort, wav_path.string() + " is shorter than requested");
      const double scale = 1.0 / static_cast<double>(wav.num_channels());
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (const auto& ch : wav.channels) acc += ch[i];
        out.samples[i] = acc * scale;
      }
      break;
    }
  }
  return out;
}

std::vector<double> far_field_delays(const MicArray& array, double azimuth_deg) {
  const double rad = azimuth_deg * kPi / 180.0;
  const Vec3 toward{std::cos(rad), std::sin(rad), 0.0};
  std::vector<double> tau;
  tau.reserve(array.size());
  for (const Vec3& m : array.mics) tau.push_back(-dot(m, toward) / array.speed_of_sound);
  return tau;
}

MultichannelSignal render_array(std::span<const PlacedSource> sources, const MicArray& array) {
  array.validate();
  require(!sources.empty(), ErrorCode::InvalidArgument, "no sources to render");
  const double fs = sources.front().signal.sample_rate;
  std::size_t length = 0;
  for (const auto& src : sources) {
    require(src.signal.sample_rate == fs, ErrorCode::SampleRateMismatch, "sources differ in sample rate");
    require(src.azimuth_deg >= -180.0 && src.azimuth_deg < 180.0, ErrorCode::InvalidArgument,
            "azimuth outside [-180, 180)");
    length = std::max(length, src.signal.samples.size());
  }

  MultichannelSignal out;
  out.sample_rate = fs;
  out.channels.assign(array.size(), std::vector<double>(length, 0.0));

  const auto pad = static_cast<std::size_t>(std::ceil(array.aperture() / array.speed_of_sound * fs)) + 1;
  const std::size_t n = next_pow2(length + 2 * pad);
  RealFft fft(n);
  std::vector<double> buf(n);
  std::vector<std::complex<double>> spec(fft.bins()), shifted(fft.bins());

  for (const auto& src : sources) {
    std::fill(buf.begin(), buf.end(), 0.0);
    std::copy(src.signal.samples.begin(), src.signal.samples.end(), buf.begin() + pad);
    fft.forward(buf, spec);
    const auto tau = far_field_delays(array, src.azimuth_deg);
    for (std::size_t m = 0; m < array.size(); ++m) {
      const double delay_samples = tau[m] * fs;
      for (std::size_t k = 0; k < spec.size(); ++k) {
        const double phi = -2.0 * kPi * static_cast<double>(k) * delay_samples / static_cast<double>(n);
        shifted[k] = spec[k] * std::complex<double>(std::cos(phi), std::sin(phi));
      }
      fft.inverse(shifted, buf);
      auto& ch = out.channels[m];
      const double scale = 1.0 / static_cast<double>(n);
      for (std::size_t i = 0; i < length; ++i) ch[i] += buf[i + pad] * scale;
    }
  }
  return out;
}

MultichannelSignal add_noise_at_snr(const MultichannelSignal& x, double snr_db, Rng& rng) {
  x.validate();
  const double signal_power = x.mean_power();
  require(signal_power > 0.0, ErrorCode::SilentSignal, "cannot set SNR of a silent signal");

  MultichannelSignal noise = x;
  for (auto& ch : noise.channels)
    for (double& s : ch) s = rng.normal();
  const double noise_power = noise.mean_power();
  const double gain = std::sqrt(signal_power / (noise_power * std::pow(10.0, snr_db / 10.0)));

  MultichannelSignal out = x;
  for (std::size_t c = 0; c < out.channels.size(); ++c)
    for (std::size_t i = 0; i < out.channels[c].size(); ++i) out.channels[c][i] += gain * noise.channels[c][i];
  return out;
}

MultichannelSignal add_noise_at_snr(const MultichannelSignal& x, double snr_db, std::uint64_t seed) {
  Rng rng(seed);
  return add_noise_at_snr(x, snr_db, rng);
}

double measured_snr_db(const MultichannelSignal& clean, const MultichannelSignal& noisy) {
  require(clean.num_channels() == noisy.num_channels() && clean.length() == noisy.length(),
          ErrorCode::ShapeMismatch, "signals differ in shape");
  double noise = 0.0;
  for (std::size_t c = 0; c < clean.channels.size(); ++c)
    for (std::size_t i = 0; i < clean.channels[c].size(); ++i) {
      const double d = noisy.channels[c][i] - clean.channels[c][i];
      noise += d * d;
    }
  noise /= static_cast<double>(clean.num_channels() * clean.length());
  return 10.0 * std::log10(clean.mean_power() / noise);
}

std::size_t frame_samples(double frame_len_s, double sample_rate) {
  return static_cast<std::size_t>(std::llround(frame_len_s * sample_rate));
}

std::vector<MultichannelFrame> frame_signal(const MultichannelSignal& x, double frame_len_s, double hop_s) {
  x.validate();
  require(frame_len_s > 0, ErrorCode::InvalidArgument, "frame length must be positive");
  const std::size_t len = frame_samples(frame_len_s, x.sample_rate);
  const std::size_t hop = hop_s > 0 ? frame_samples(hop_s, x.sample_rate) : len;
  require(len > 0 && hop > 0, ErrorCode::InvalidArgument, "frame or hop shorter than one sample");
  require(len <= x.length(), ErrorCode::TooShort, "signal shorter than one frame");

  std::vector<MultichannelFrame> frames;
  for (std::size_t start = 0; start + len <= x.length(); start += hop) {
    MultichannelFrame f;
    f.sample_rate = x.sample_rate;
    for (const auto& ch : x.channels) f.channels.emplace_back(ch.begin() + start, ch.begin() + start + len);
    frames.push_back(std::move(f));
  }
  return frames;
}

void quantize_to_f32(MultichannelSignal& x) {
  for (auto& ch : x.channels)
    for (double& s : ch) s = static_cast<double>(static_cast<float>(s));
}

}  // namespace avdoa
