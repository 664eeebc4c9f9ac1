#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "avdoa/geom.hpp"
#include "avdoa/rng.hpp"

namespace avdoa {

struct DetectionFrame {
  std::size_t frame_index = 0;
  std::vector<BoundingBox> boxes;

  void validate() const;
  friend bool operator==(const DetectionFrame&, const DetectionFrame&) = default;
};

inline constexpr std::size_t kVisualLength = 51;

// Row 0 = horizontal (u) axis, row 1 = vertical (v) axis, `length` entries each.
struct VisualFeature {
  std::size_t length = kVisualLength;
  std::vector<double> values;

  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values).subspan(r * length, length);
  }
};

Pixel bbox_center(const BoundingBox& b);

// Per-axis Gaussian encoding evaluated at `length` points spanning
// [0, image_w] and [0, image_h] inclusive: row0[i] = max_d exp(-(g_i - u_c)^2 / (2 w^2)),
// row1 likewise with v_c and h. Frames without detections get
// `empty_value` everywhere (default 1 / length).
VisualFeature encode_visual(const DetectionFrame& frame, double image_w, double image_h,
                            std::size_t length = kVisualLength, std::optional<double> empty_value = std::nullopt);

enum class SwapMode { ExactCount, Bernoulli };

// Ordered list of frame-position pairs whose detection sets are exchanged.
struct SwapPlan {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t selected = 0;
};

SwapPlan plan_swaps(std::size_t frame_count, double fdsp, Rng& rng, SwapMode mode = SwapMode::ExactCount);
void apply_swaps(std::vector<DetectionFrame>& frames, const SwapPlan& plan);
void undo_swaps(std::vector<DetectionFrame>& frames, const SwapPlan& plan);

// Exchanges the full detection sets of randomly paired frames. Frame
// indices stay in place; only the boxes move.
std::vector<DetectionFrame> swap_detections(const std::vector<DetectionFrame>& frames, double fdsp,
                                            std::uint64_t seed, SwapMode mode = SwapMode::ExactCount);

// Percentage of frames with at least one detection.
double detection_rate(std::span<const DetectionFrame> frames);

std::vector<DetectionFrame> read_detections(const std::filesystem::path& path);
void write_detections(const std::filesystem::path& path, std::span<const DetectionFrame> frames);

}  // namespace avdoa
