#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "avdoa/geom.hpp"
#include "avdoa/rng.hpp"

namespace avdoa {

struct MonoSignal {
  std::vector<double> samples;
  double sample_rate = 48000.0;
};

// C equal-length channels sharing one sample rate.
struct MultichannelSignal {
  std::vector<std::vector<double>> channels;
  double sample_rate = 48000.0;

  std::size_t num_channels() const { return channels.size(); }
  std::size_t length() const { return channels.empty() ? 0 : channels.front().size(); }
  void validate() const;
  double mean_power() const;
};

// One analysis segment; same layout as a full signal.
using MultichannelFrame = MultichannelSignal;

enum class SourceKind { White, SpeechLikeAr, WavFile };

SourceKind parse_source_kind(const std::string& name);

// Deterministic for a fixed seed. WavFile reads `wav_path`, mixes to mono and
// keeps the first `duration_s` seconds.
MonoSignal synth_source(SourceKind kind, double duration_s, double sample_rate, std::uint64_t seed,
                        const std::filesystem::path& wav_path = {});

struct PlacedSource {
  MonoSignal signal;
  double azimuth_deg = 0.0;
};

// Per-microphone propagation delay in seconds for a far-field source at
// `azimuth_deg` (array frame): tau_m = -(d_m . u(az)) / c.
std::vector<double> far_field_delays(const MicArray& array, double azimuth_deg);

// Free-field far-field rendering; output length is the longest source.
MultichannelSignal render_array(std::span<const PlacedSource> sources, const MicArray& array);

// Adds white Gaussian noise to every channel with one common gain chosen so
// the realized SNR over the whole signal equals `snr_db`.
MultichannelSignal add_noise_at_snr(const MultichannelSignal& x, double snr_db, Rng& rng);
MultichannelSignal add_noise_at_snr(const MultichannelSignal& x, double snr_db, std::uint64_t seed);

double measured_snr_db(const MultichannelSignal& clean, const MultichannelSignal& noisy);

inline constexpr double kDefaultFrameSeconds = 0.170;

std::size_t frame_samples(double frame_len_s, double sample_rate);

// hop_s <= 0 selects hop = frame length. Trailing partial frames are dropped.
std::vector<MultichannelFrame> frame_signal(const MultichannelSignal& x, double frame_len_s = kDefaultFrameSeconds,
                                            double hop_s = 0.0);

// Rounds every sample to float32 precision (what a float WAV stores).
void quantize_to_f32(MultichannelSignal& x);

}  // namespace avdoa
