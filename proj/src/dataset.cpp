#include "avdoa/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "avdoa/error.hpp"
#include "avdoa/eval.hpp"
#include "avdoa/wav.hpp"

namespace avdoa {

namespace {

constexpr int kPlacementAttempts = 10000;
constexpr int kBoxAttempts = 100;
constexpr std::size_t kRenderMargin = 64;
constexpr double kAzimuthTolerance = 1e-6;

// Stream tags for mix_seed so the independent random streams never collide.
enum : std::uint64_t { kTagLayout = 1, kTagPlacement = 2, kTagFace = 3, kTagSignal = 4, kTagWavOffset = 5 };

std::string number(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

bool central_in_view(WorldPoint p, const CameraCalibration& cal, double margin) {
  const CameraPoint pc = world_to_camera(p, cal);
  if (!(pc.z > 0.0)) return false;
  const Pixel px = project_point(pc, cal);
  const Intrinsics& in = cal.intrinsics;
  const double du = in.width * (1.0 - margin) / 2.0, dv = in.height * (1.0 - margin) / 2.0;
  return px.u >= du && px.u < in.width - du && px.v >= dv && px.v < in.height - dv;
}

}  // namespace

void ScenarioConfig::validate() const {
  require(frames >= 1, ErrorCode::InvalidArgument, "frames must be >= 1");
  require(p_two_sources >= 0 && p_two_sources <= 1, ErrorCode::InvalidArgument, "p_two_sources must be in [0, 1]");
  require(visibility_fraction >= 0 && visibility_fraction <= 1, ErrorCode::InvalidArgument,
          "visibility must be in [0, 1]");
  require(azimuth_min < azimuth_max && azimuth_min >= -180 && azimuth_max <= 180, ErrorCode::InvalidArgument,
          "azimuth range must be a non-empty part of [-180, 180]");
  require(distance_min > 0 && distance_min < distance_max, ErrorCode::InvalidArgument, "bad distance range");
  require(height_min <= height_max, ErrorCode::InvalidArgument, "bad height range");
  require(fov_margin > 0 && fov_margin <= 1, ErrorCode::InvalidArgument, "fov_margin must be in (0, 1]");
  require(min_separation_deg >= 0 && min_separation_deg < 180, ErrorCode::InvalidArgument, "bad min separation");
  require(sample_rate > 0 && frame_seconds > 0 && frame_samples() > 0, ErrorCode::InvalidArgument,
          "bad sample rate or frame length");
  if (source_kind == SourceKind::WavFile) {
    require(std::filesystem::exists(source_wav), ErrorCode::FileNotFound, "source_wav " + source_wav.string());
  }
  noise.validate();
  face.validate();
  array.validate();
  camera.validate();
}

ScenarioConfig ScenarioConfig::from_kv(const KeyValueFile& kv, const std::filesystem::path& base_dir) {
  ScenarioConfig c;
  c.frames = static_cast<std::size_t>(kv.get_int("frames", static_cast<long long>(c.frames)));
  c.p_two_sources = kv.get_double("p_two_sources", c.p_two_sources);
  c.azimuth_min = kv.get_double("azimuth_min", c.azimuth_min);
  c.azimuth_max = kv.get_double("azimuth_max", c.azimuth_max);
  c.distance_min = kv.get_double("distance_min", c.distance_min);
  c.distance_max = kv.get_double("distance_max", c.distance_max);
  c.height_min = kv.get_double("height_min", c.height_min);
  c.height_max = kv.get_double("height_max", c.height_max);
  c.visibility_fraction = kv.get_double("visibility", c.visibility_fraction);
  c.fov_margin = kv.get_double("fov_margin", c.fov_margin);
  c.min_separation_deg = kv.get_double("min_separation", c.min_separation_deg);
  if (kv.has("source")) c.source_kind = parse_source_kind(kv.get("source"));
  if (kv.has("source_wav")) c.source_wav = resolve(base_dir, kv.get("source_wav"));
  c.sample_rate = kv.get_double("sample_rate", c.sample_rate);
  c.frame_seconds = kv.get_double("frame_seconds", c.frame_seconds);
  if (kv.has("noise_var")) {
    const auto v = kv.get_doubles("noise_var");
    require(v.size() == 1 || v.size() == 3, ErrorCode::FormatError, "noise_var needs 1 or 3 numbers");
    c.noise = v.size() == 1 ? NoiseCov3{v[0], v[0], v[0]} : NoiseCov3{v[0], v[1], v[2]};
  }
  c.face.width = kv.get_double("face_width", c.face.width);
  c.face.height = kv.get_double("face_height", c.face.height);
  if (kv.has("array_file")) {
    c.array = MicArray::load(resolve(base_dir, kv.get("array_file")));
  } else if (kv.has("array_side")) {
    c.array = MicArray::square(kv.get_double("array_side"));
  }
  if (kv.has("camera_file")) c.camera = CameraCalibration::load(resolve(base_dir, kv.get("camera_file")));
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(c.seed)));
  c.validate();
  return c;
}

KeyValueFile ScenarioConfig::to_kv() const {
  KeyValueFile kv;
  kv.set("frames", std::to_string(frames));
  kv.set("p_two_sources", number(p_two_sources));
  kv.set("azimuth_min", number(azimuth_min));
  kv.set("azimuth_max", number(azimuth_max));
  kv.set("distance_min", number(distance_min));
  kv.set("distance_max", number(distance_max));
  kv.set("height_min", number(height_min));
  kv.set("height_max", number(height_max));
  kv.set("visibility", number(visibility_fraction));
  kv.set("fov_margin", number(fov_margin));
  kv.set("min_separation", number(min_separation_deg));
  kv.set("source", source_kind == SourceKind::White ? "white"
                   : source_kind == SourceKind::SpeechLikeAr ? "speech_like_ar"
                                                             : "wav");
  if (!source_wav.empty()) kv.set("source_wav", std::filesystem::absolute(source_wav).string());
  kv.set("sample_rate", number(sample_rate));
  kv.set("frame_seconds", number(frame_seconds));
  kv.set("noise_var", number(noise.var_x) + " " + number(noise.var_y) + " " + number(noise.var_z));
  kv.set("face_width", number(face.width));
  kv.set("face_height", number(face.height));
  kv.set("array_file", "array.txt");
  kv.set("camera_file", "camera.txt");
  kv.set("seed", std::to_string(seed));
  return kv;
}

std::vector<double> FrameRecord::azimuths() const {
  std::vector<double> out;
  for (const auto& s : sources) out.push_back(s.azimuth_deg);
  return out;
}

Dataset simulate_dataset(const ScenarioConfig& config) {
  config.validate();
  Dataset ds;
  ds.array = config.array;
  ds.camera = config.camera;
  ds.sample_rate = config.sample_rate;
  ds.frame_samples = config.frame_samples();
  ds.scenario = config;

  for (std::size_t f = 0; f < config.frames; ++f) {
    Rng layout(mix_seed(config.seed, f, kTagLayout));
    const bool visible = layout.uniform() < config.visibility_fraction;
    const std::size_t count = layout.uniform() < config.p_two_sources ? 2 : 1;

    FrameRecord rec;
    rec.frame_index = f;
    rec.timestamp_s = static_cast<double>(f) * config.frame_seconds;
    rec.sample_offset = f * ds.frame_samples;
    DetectionFrame det;
    det.frame_index = f;

    Rng place(mix_seed(config.seed, f, kTagPlacement));
    for (std::uint32_t id = 0; id < count; ++id) {
      SourceAnnotation src;
      src.id = id;
      src.visible = visible;
      bool placed = false;
      for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
        const double az = place.uniform(config.azimuth_min, config.azimuth_max);
        const double dist = place.uniform(config.distance_min, config.distance_max);
        const double height = place.uniform(config.height_min, config.height_max);
        const double rad = (az + config.array.yaw_deg) * std::numbers::pi / 180.0;
        const WorldPoint p = config.array.origin + Vec3{dist * std::cos(rad), dist * std::sin(rad), height};
        const bool in_view = visible ? central_in_view(p, config.camera, config.fov_margin)
                                     : !in_field_of_view(p, config.camera);
        if (!in_view) continue;
        const double doa = doa_from_position(p, config.array);
        const bool separated = std::all_of(rec.sources.begin(), rec.sources.end(), [&](const SourceAnnotation& o) {
          return angular_error(o.azimuth_deg, doa) >= config.min_separation_deg;
        });
        if (!separated) continue;
        src.position = p;
        src.azimuth_deg = doa;
        placed = true;
      }
      require(placed, ErrorCode::InvalidArgument,
              "could not place a source for frame " + std::to_string(f) + "; check ranges and camera");

      if (visible) {
        // Redraw the location noise until the box lands in the image; fall
        // back to the noiseless box if it never does.
        Rng face_rng(mix_seed(config.seed, f, kTagFace * 16 + id));
        std::optional<BoundingBox> box;
        for (int attempt = 0; attempt < kBoxAttempts && !box; ++attempt) {
          box = synthesize_bbox(src.position, config.camera, config.face, config.noise, face_rng);
        }
        if (!box) box = synthesize_bbox(src.position, config.camera, config.face, NoiseCov3{0, 0, 0}, face_rng);
        if (box) det.boxes.push_back(*box);
      }
      rec.sources.push_back(src);
    }
    ds.frames.push_back(std::move(rec));
    ds.detections.push_back(std::move(det));
  }
  return ds;
}

struct FrameAudioSource::Impl {
  const Dataset& dataset;
  std::optional<WavReader> reader;
  MonoSignal wav_pool;

  explicit Impl(const Dataset& ds) : dataset(ds) {
    if (ds.scenario) {
      if (ds.scenario->source_kind == SourceKind::WavFile) {
        const MultichannelSignal wav = read_wav(ds.scenario->source_wav);
        require(wav.sample_rate == ds.sample_rate, ErrorCode::SampleRateMismatch,
                ds.scenario->source_wav.string() + " sample rate differs from the scenario");
        wav_pool.sample_rate = wav.sample_rate;
        wav_pool.samples.assign(wav.length(), 0.0);
        for (const auto& ch : wav.channels)
          for (std::size_t i = 0; i < wav.length(); ++i) wav_pool.samples[i] += ch[i] / static_cast<double>(wav.num_channels());
        require(wav_pool.samples.size() >= ds.frame_samples + 2 * kRenderMargin, ErrorCode::TooShort,
                "source WAV shorter than one frame");
      }
    } else {
      reader.emplace(ds.audio_path);
      require(reader->sample_rate() == ds.sample_rate, ErrorCode::SampleRateMismatch,
              ds.audio_path.string() + " sample rate differs from the manifest");
      require(reader->channels() == ds.array.size(), ErrorCode::ShapeMismatch,
              ds.audio_path.string() + " channel count differs from the array");
    }
  }

  MonoSignal source_signal(const ScenarioConfig& sc, const FrameRecord& rec, const SourceAnnotation& src) const {
    const std::size_t n = dataset.frame_samples + 2 * kRenderMargin;
    const std::uint64_t seed = mix_seed(sc.seed, rec.frame_index, kTagSignal * 16 + src.id);
    if (sc.source_kind != SourceKind::WavFile) {
      return synth_source(sc.source_kind, static_cast<double>(n) / sc.sample_rate, sc.sample_rate, seed);
    }
    Rng rng(mix_seed(seed, kTagWavOffset));
    const std::size_t start = rng.below(wav_pool.samples.size() - n + 1);
    MonoSignal out;
    out.sample_rate = sc.sample_rate;
    out.samples.assign(wav_pool.samples.begin() + static_cast<std::ptrdiff_t>(start),
                       wav_pool.samples.begin() + static_cast<std::ptrdiff_t>(start + n));
    return out;
  }

  MultichannelSignal get(std::size_t pos) {
    const FrameRecord& rec = dataset.frames.at(pos);
    if (reader) return reader->read(rec.sample_offset, dataset.frame_samples);

    const ScenarioConfig& sc = *dataset.scenario;
    std::vector<PlacedSource> placed;
    for (const auto& src : rec.sources) placed.push_back({source_signal(sc, rec, src), src.azimuth_deg});
    const MultichannelSignal full = render_array(placed, dataset.array);
    MultichannelSignal out;
    out.sample_rate = full.sample_rate;
    for (const auto& ch : full.channels) {
      out.channels.emplace_back(ch.begin() + kRenderMargin, ch.begin() + kRenderMargin + static_cast<std::ptrdiff_t>(dataset.frame_samples));
    }
    quantize_to_f32(out);
    return out;
  }
};

FrameAudioSource::FrameAudioSource(const Dataset& dataset) : impl_(std::make_unique<Impl>(dataset)) {}
FrameAudioSource::~FrameAudioSource() = default;

MultichannelSignal FrameAudioSource::get(std::size_t position) { return impl_->get(position); }

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  require(dataset.frames.size() == dataset.detections.size(), ErrorCode::ShapeMismatch,
          "frames and detections differ in count");
  std::filesystem::create_directories(dir);
  dataset.array.save(dir / "array.txt");
  dataset.camera.save(dir / "camera.txt");
  if (dataset.scenario) {
    std::ofstream sc(dir / "scenario.txt");
    sc << dataset.scenario->to_kv().to_string();
  }
  write_detections(dir / "detections.jsonl", dataset.detections);

  {
    FrameAudioSource audio(dataset);
    WavWriter wav(dir / "audio.wav", dataset.array.size(), dataset.sample_rate);
    for (std::size_t i = 0; i < dataset.size(); ++i) wav.append(audio.get(i));
    wav.finish();
  }

  std::ofstream out(dir / "manifest.jsonl");
  if (!out) throw Error(ErrorCode::IoError, "cannot write manifest in " + dir.string());
  nlohmann::json header = {{"format", "avdoa-manifest"},   {"version", 1},
                           {"array", "array.txt"},         {"calibration", "camera.txt"},
                           {"detections", "detections.jsonl"}, {"audio", "audio.wav"},
                           {"sample_rate", dataset.sample_rate}, {"frame_samples", dataset.frame_samples}};
  out << header.dump() << "\n";
  for (const auto& rec : dataset.frames) {
    nlohmann::json j;
    j["frame_index"] = rec.frame_index;
    j["timestamp_s"] = rec.timestamp_s;
    j["sources"] = nlohmann::json::array();
    for (const auto& s : rec.sources) {
      j["sources"].push_back({{"id", s.id},
                              {"x", s.position.x},
                              {"y", s.position.y},
                              {"z", s.position.z},
                              {"azimuth", s.azimuth_deg},
                              {"visible", s.visible}});
    }
    j["audio_file"] = "audio.wav";
    j["sample_offset"] = rec.sample_offset;
    out << j.dump() << "\n";
  }
  if (!out) throw Error(ErrorCode::IoError, "short write to manifest");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.jsonl";
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::FileNotFound, manifest_path.string());

  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  std::string detections_file;
  try {
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::FormatError, "empty manifest");
    ++line_no;
    const auto header = nlohmann::json::parse(line);
    require(header.value("format", "") == "avdoa-manifest", ErrorCode::FormatError, "manifest header missing");
    ds.array = MicArray::load(dir / header.at("array").get<std::string>());
    ds.camera = CameraCalibration::load(dir / header.at("calibration").get<std::string>());
    ds.sample_rate = header.at("sample_rate").get<double>();
    ds.frame_samples = header.at("frame_samples").get<std::size_t>();
    ds.audio_path = dir / header.at("audio").get<std::string>();
    detections_file = header.at("detections").get<std::string>();

    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto j = nlohmann::json::parse(line);
      FrameRecord rec;
      rec.frame_index = j.at("frame_index").get<std::size_t>();
      rec.timestamp_s = j.at("timestamp_s").get<double>();
      rec.sample_offset = j.at("sample_offset").get<std::size_t>();
      for (const auto& s : j.at("sources")) {
        SourceAnnotation a;
        a.id = s.at("id").get<std::uint32_t>();
        a.position = {s.at("x").get<double>(), s.at("y").get<double>(), s.at("z").get<double>()};
        a.azimuth_deg = s.at("azimuth").get<double>();
        a.visible = s.value("visible", false);
        const double expected = doa_from_position(a.position, ds.array);
        require(angular_error(expected, a.azimuth_deg) <= kAzimuthTolerance, ErrorCode::FormatError,
                "frame " + std::to_string(rec.frame_index) + ": azimuth disagrees with position");
        rec.sources.push_back(a);
      }
      require(ds.frames.empty() || rec.frame_index > ds.frames.back().frame_index, ErrorCode::FormatError,
              "frame indices must be strictly increasing");
      ds.frames.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, manifest_path.string() + ":" + std::to_string(line_no) + ": " + e.what());
  }

  const auto detections = read_detections(dir / detections_file);
  for (const auto& rec : ds.frames) {
    DetectionFrame d;
    d.frame_index = rec.frame_index;
    ds.detections.push_back(d);
  }
  // Detections are matched by frame index; frames without a record have none.
  for (const auto& d : detections) {
    const auto it = std::lower_bound(ds.frames.begin(), ds.frames.end(), d.frame_index,
                                     [](const FrameRecord& r, std::size_t idx) { return r.frame_index < idx; });
    require(it != ds.frames.end() && it->frame_index == d.frame_index, ErrorCode::FormatError,
            "detection for unknown frame " + std::to_string(d.frame_index));
    ds.detections[static_cast<std::size_t>(it - ds.frames.begin())].boxes = d.boxes;
  }
  require(std::filesystem::exists(ds.audio_path), ErrorCode::FileNotFound, ds.audio_path.string());
  return ds;
}

}  // namespace avdoa
