#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>

#include "avdoa/audio.hpp"

namespace avdoa {

// Random-access reader over the data chunk; keeps the file open.
class WavReader {
 public:
  explicit WavReader(const std::filesystem::path& path);

  std::size_t channels() const { return channels_; }
  std::size_t length() const { return frames_; }
  double sample_rate() const { return sample_rate_; }

  // Samples [offset, offset + count) of every channel.
  MultichannelSignal read(std::size_t offset, std::size_t count);

 private:
  std::filesystem::path path_;
  std::ifstream file_;
  std::size_t channels_ = 0;
  std::size_t frames_ = 0;
  std::size_t width_ = 0;
  std::uint16_t format_ = 0;
  double sample_rate_ = 0.0;
  std::streamoff data_offset_ = 0;
};

// Reads RIFF/WAVE PCM 16-bit, PCM 32-bit and IEEE float 32-bit, any channel
// count (WAVE_FORMAT_EXTENSIBLE accepted). Integer PCM is scaled to [-1, 1).
MultichannelSignal read_wav(const std::filesystem::path& path);

// Appends float32 blocks to a WAV file; sizes are patched by finish().
class WavWriter {
 public:
  WavWriter(const std::filesystem::path& path, std::size_t channels, double sample_rate);
  ~WavWriter();

  WavWriter(const WavWriter&) = delete;
  WavWriter& operator=(const WavWriter&) = delete;

  void append(const MultichannelSignal& block);
  void finish();

 private:
  std::filesystem::path path_;
  std::ofstream file_;
  std::size_t channels_;
  double sample_rate_;
  std::uint64_t frames_ = 0;
  bool finished_ = false;
};

enum class WavEncoding { Pcm16, Pcm32, Float32 };

void write_wav(const std::filesystem::path& path, const MultichannelSignal& signal,
               WavEncoding encoding = WavEncoding::Float32);

}  // namespace avdoa
