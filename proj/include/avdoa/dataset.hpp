#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "avdoa/audio.hpp"
#include "avdoa/geom.hpp"
#include "avdoa/kv_file.hpp"
#include "avdoa/visual.hpp"

namespace avdoa {

// Synthetic scene description. Every frame holds one 170 ms segment with one
// or two active sources; a frame is "visible" with probability
// `visibility_fraction`, in which case all its sources are placed inside the
// camera view (and get face boxes), otherwise all are placed outside it.
struct ScenarioConfig {
  std::size_t frames = 1000;
  double p_two_sources = 0.0;
  double azimuth_min = -180.0;
  double azimuth_max = 180.0;
  double distance_min = 1.0;
  double distance_max = 3.0;
  double height_min = -0.3;
  double height_max = 0.3;
  double visibility_fraction = 0.1;
  // Visible sources project into the central fraction of the image.
  double fov_margin = 0.8;
  double min_separation_deg = 10.0;
  SourceKind source_kind = SourceKind::SpeechLikeAr;
  std::filesystem::path source_wav;
  double sample_rate = 48000.0;
  double frame_seconds = kDefaultFrameSeconds;
  NoiseCov3 noise{};
  FaceSize face{};
  MicArray array = MicArray::square(0.1);
  CameraCalibration camera = CameraCalibration::looking_along({}, 0.0, Intrinsics{});
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t frame_samples() const { return avdoa::frame_samples(frame_seconds, sample_rate); }

  // Relative array_file / camera_file paths resolve against `base_dir`.
  static ScenarioConfig from_kv(const KeyValueFile& kv, const std::filesystem::path& base_dir = {});
  KeyValueFile to_kv() const;
};

struct SourceAnnotation {
  std::uint32_t id = 0;
  WorldPoint position{};
  double azimuth_deg = 0.0;
  bool visible = false;
};

struct FrameRecord {
  std::size_t frame_index = 0;
  double timestamp_s = 0.0;
  std::vector<SourceAnnotation> sources;
  std::size_t sample_offset = 0;

  std::vector<double> azimuths() const;
};

struct Dataset {
  MicArray array;
  CameraCalibration camera;
  double sample_rate = 48000.0;
  std::size_t frame_samples = 8160;
  std::vector<FrameRecord> frames;
  std::vector<DetectionFrame> detections;  // aligned with frames

  // Exactly one of these backs the audio.
  std::optional<ScenarioConfig> scenario;
  std::filesystem::path audio_path;

  std::size_t size() const { return frames.size(); }
};

Dataset simulate_dataset(const ScenarioConfig& config);

// Produces the multichannel audio of one frame, either by rendering the
// scenario or by reading the dataset WAV. Holds per-instance state (file
// handle, source pool), so use one instance per thread.
class FrameAudioSource {
 public:
  explicit FrameAudioSource(const Dataset& dataset);
  ~FrameAudioSource();

  MultichannelSignal get(std::size_t position);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Writes manifest.jsonl, array.txt, camera.txt, detections.jsonl, audio.wav
// (float32, frames back to back) and scenario.txt when available.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

// Validates frame ordering and azimuth/position consistency.
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace avdoa
