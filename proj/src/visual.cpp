#include "avdoa/visual.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "avdoa/error.hpp"

namespace avdoa {

void DetectionFrame::validate() const {
  for (const auto& b : boxes) {
    require(b.w > 0 && b.h > 0, ErrorCode::InvalidArgument,
            "frame " + std::to_string(frame_index) + ": box with non-positive size");
  }
}

Pixel bbox_center(const BoundingBox& b) { return {b.u + b.w / 2.0, b.v + b.h / 2.0}; }

VisualFeature encode_visual(const DetectionFrame& frame, double image_w, double image_h, std::size_t length,
                            std::optional<double> empty_value) {
  require(image_w > 0 && image_h > 0, ErrorCode::InvalidArgument, "image dimensions must be positive");
  require(length >= 2, ErrorCode::InvalidArgument, "encoding length must be >= 2");
  frame.validate();

  VisualFeature out;
  out.length = length;
  if (frame.boxes.empty()) {
    out.values.assign(2 * length, empty_value.value_or(1.0 / static_cast<double>(length)));
    return out;
  }
  // Far tails underflow to zero; keep them positive and representable in the
  // float32 feature store.
  out.values.assign(2 * length, std::numeric_limits<float>::min());
  const double step_u = image_w / static_cast<double>(length - 1);
  const double step_v = image_h / static_cast<double>(length - 1);
  for (const auto& b : frame.boxes) {
    const Pixel c = bbox_center(b);
    for (std::size_t i = 0; i < length; ++i) {
      const double du = static_cast<double>(i) * step_u - c.u;
      const double dv = static_cast<double>(i) * step_v - c.v;
      out.values[i] = std::max(out.values[i], std::exp(-du * du / (2.0 * b.w * b.w)));
      out.values[length + i] = std::max(out.values[length + i], std::exp(-dv * dv / (2.0 * b.h * b.h)));
    }
  }
  return out;
}

SwapPlan plan_swaps(std::size_t frame_count, double fdsp, Rng& rng, SwapMode mode) {
  require(fdsp >= 0.0 && fdsp <= 1.0, ErrorCode::InvalidArgument, "swap fraction must be in [0, 1]");
  std::vector<std::size_t> order(frame_count);
  std::iota(order.begin(), order.end(), 0);

  std::size_t k = 0;
  if (mode == SwapMode::ExactCount) {
    // Fisher-Yates; the first k entries are the selected frames.
    for (std::size_t i = frame_count; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    // The epsilon keeps e.g. 0.3 * 10 from rounding up to 4.
    k = static_cast<std::size_t>(std::ceil(fdsp * static_cast<double>(frame_count) - 1e-9));
    k = std::min(k, frame_count);
  } else {
    std::vector<std::size_t> chosen, rest;
    for (std::size_t i = 0; i < frame_count; ++i) (rng.uniform() < fdsp ? chosen : rest).push_back(i);
    for (std::size_t i = chosen.size(); i > 1; --i) std::swap(chosen[i - 1], chosen[rng.below(i)]);
    k = chosen.size();
    order = chosen;
    order.insert(order.end(), rest.begin(), rest.end());
  }

  SwapPlan plan;
  plan.selected = k;
  for (std::size_t i = 0; i + 1 < k; i += 2) plan.pairs.emplace_back(order[i], order[i + 1]);
  if (k % 2 == 1 && k < frame_count) {
    plan.pairs.emplace_back(order[k - 1], order[k + rng.below(frame_count - k)]);
  }
  return plan;
}

void apply_swaps(std::vector<DetectionFrame>& frames, const SwapPlan& plan) {
  for (const auto& [a, b] : plan.pairs) std::swap(frames.at(a).boxes, frames.at(b).boxes);
}

void undo_swaps(std::vector<DetectionFrame>& frames, const SwapPlan& plan) {
  for (auto it = plan.pairs.rbegin(); it != plan.pairs.rend(); ++it) std::swap(frames.at(it->first).boxes, frames.at(it->second).boxes);
}

std::vector<DetectionFrame> swap_detections(const std::vector<DetectionFrame>& frames, double fdsp,
                                            std::uint64_t seed, SwapMode mode) {
  Rng rng(seed);
  const SwapPlan plan = plan_swaps(frames.size(), fdsp, rng, mode);
  std::vector<DetectionFrame> out = frames;
  apply_swaps(out, plan);
  return out;
}

double detection_rate(std::span<const DetectionFrame> frames) {
  require(!frames.empty(), ErrorCode::EmptyDataset, "no frames");
  const auto hits = std::count_if(frames.begin(), frames.end(), [](const auto& f) { return !f.boxes.empty(); });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(frames.size());
}

std::vector<DetectionFrame> read_detections(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  std::vector<DetectionFrame> frames;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      DetectionFrame f;
      f.frame_index = j.at("frame_index").get<std::size_t>();
      for (const auto& b : j.at("boxes")) {
        require(b.size() == 4, ErrorCode::FormatError, "box needs 4 numbers");
        f.boxes.push_back({b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()});
      }
      f.validate();
      frames.push_back(std::move(f));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::FormatError, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return frames;
}

void write_detections(const std::filesystem::path& path, std::span<const DetectionFrame> frames) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& f : frames) {
    nlohmann::json j;
    j["frame_index"] = f.frame_index;
    j["boxes"] = nlohmann::json::array();
    for (const auto& b : f.boxes) j["boxes"].push_back({b.u, b.v, b.w, b.h});
    out << j.dump() << "\n";
  }
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

}  // namespace avdoa
