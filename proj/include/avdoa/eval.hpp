#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace avdoa {

inline constexpr std::size_t kNumDoaClasses = 360;

// Class index i <-> azimuth i - 180 degrees.
inline double class_to_azimuth(std::size_t i) { return static_cast<double>(i) - 180.0; }
std::size_t azimuth_to_class(double azimuth_deg);

// Circular distance in [0, 180].
double angular_error(double a_deg, double b_deg);

// The n highest circular local maxima, greedily suppressing anything closer
// than `min_separation_deg` to an already chosen peak. When fewer than n
// peaks survive, the highest remaining bins are used (bins that respect the
// separation first). Ties go to the lower index.
std::vector<double> decode_doa(std::span<const double> posterior, std::size_t n_sources,
                               double min_separation_deg = 10.0);

struct FrameErrors {
  std::vector<double> gt;
  std::vector<double> pred;  // reordered to match gt
  std::vector<double> errors;
};

struct EvalResult {
  double mae = 0.0;
  double acc = 0.0;  // percent
  std::size_t frame_count = 0;
  std::size_t pair_count = 0;
  std::vector<FrameErrors> frames;
};

// Optimal (exhaustive permutation) assignment per frame, then MAE over all
// matched pairs and ACC = share of pairs with error <= allowance.
EvalResult mae_acc(const std::vector<std::vector<double>>& pred_sets,
                   const std::vector<std::vector<double>>& gt_sets, double allowance_deg = 5.0);

// One JSON object per frame: {frame_index, gt, pred, matched_errors}.
void write_results_jsonl(const std::filesystem::path& path, std::span<const std::size_t> frame_indices,
                         const EvalResult& result);

}  // namespace avdoa
