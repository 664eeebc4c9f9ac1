#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "avdoa/dataset.hpp"
#include "avdoa/eval.hpp"
#include "avdoa/feature_store.hpp"
#include "avdoa/gcc_phat.hpp"
#include "avdoa/nn/model.hpp"
#include "avdoa/nn/target.hpp"
#include "avdoa/nn/train.hpp"

namespace avdoa {

struct FeatureOptions {
  std::optional<double> snr_db;  // nullopt = clean audio
  double fdsp = 0.0;             // fraction of frames whose detections are swapped
  SwapMode swap_mode = SwapMode::ExactCount;
  std::uint64_t seed = 0;
  LagRange lags{};
  std::size_t fft_len = kDefaultFftLength;
  std::size_t visual_length = kVisualLength;
  std::optional<double> empty_visual_value;
  std::size_t threads = 1;
};

// Per-frame features and labels, all vectors row-aligned.
struct FeatureSet {
  std::vector<FeatureRecord> gcc;
  std::vector<FeatureRecord> visual;
  std::vector<IndexEntry> index;
  std::vector<std::vector<double>> labels;  // ground-truth azimuths
  double sample_rate = 48000.0;
  LagRange lags{};

  std::size_t size() const { return index.size(); }
};

FeatureSet extract_features(const Dataset& dataset, std::span<const std::size_t> positions,
                            const FeatureOptions& options);

// Only the audio side (no swaps, no visual encoding).
std::vector<FeatureRecord> extract_gcc(const Dataset& dataset, std::span<const std::size_t> positions,
                                       const FeatureOptions& options);
std::vector<FeatureRecord> extract_visual(const Dataset& dataset, std::span<const std::size_t> positions,
                                          const FeatureOptions& options);

// gcc.doaf/.idx, visual.doaf/.idx, labels.jsonl, meta.txt.
void save_features(const FeatureSet& features, const std::filesystem::path& dir);
FeatureSet load_features(const std::filesystem::path& dir);

enum class Split { Train, Test, All };
Split parse_split(const std::string& name);

inline constexpr double kDefaultTestFraction = 0.2;

// Contiguous split: the last `test_fraction` of rows form the test set.
std::vector<std::size_t> split_rows(std::size_t n, Split split, double test_fraction = kDefaultTestFraction);

nn::TrainingSet make_training_set(const FeatureSet& features, std::span<const std::size_t> rows,
                                  double sigma_deg = nn::kDefaultTargetSigmaDeg, bool with_visual = true);

// Known-N decoding of the network posteriors (n = ground-truth count per frame).
std::vector<std::vector<double>> predict_doas(const nn::Network& net, const FeatureSet& features,
                                              std::span<const std::size_t> rows, double nms_deg = 10.0);

std::vector<std::vector<double>> srp_doas(const FeatureSet& features, std::span<const std::size_t> rows,
                                          const MicArray& array, double nms_deg = 10.0);

struct EvalSummary {
  EvalResult overall;
  std::optional<EvalResult> single;  // N = 1 frames
  std::optional<EvalResult> dual;    // N = 2 frames
  std::vector<std::size_t> frame_indices;
};

EvalSummary summarize(const std::vector<std::vector<double>>& pred, const std::vector<std::vector<double>>& gt,
                      std::vector<std::size_t> frame_indices);

// Columns n1_mae,n1_acc,n2_mae,n2_acc,overall_mae,overall_acc; empty subsets are "NA".
void write_summary_csv(const std::filesystem::path& path, const EvalSummary& summary);

struct GridCell {
  double mae = 0.0;
  double acc = 0.0;
};

struct RobustnessGrid {
  std::vector<std::optional<double>> snr_levels;  // nullopt = clean
  std::vector<double> fdsp_levels;                // fractions
  std::vector<std::vector<GridCell>> cells;       // [snr][fdsp]
};

std::vector<std::optional<double>> default_snr_levels();
std::vector<double> default_fdsp_levels();

// Corrupts the test frames only (audio at each SNR, detections at each
// FDSP), re-extracts features and evaluates the fixed model per cell.
RobustnessGrid robustness_grid(const nn::Network& net, const Dataset& dataset, std::span<const std::size_t> positions,
                               const std::vector<std::optional<double>>& snr_levels,
                               const std::vector<double>& fdsp_levels, const FeatureOptions& base);

// Rows = SNR, columns = FDSP percent, cells "mae/acc".
void write_grid_csv(const std::filesystem::path& path, const RobustnessGrid& grid);
// One MAE-vs-SNR series per FDSP column.
void write_mae_curves_csv(const std::filesystem::path& path, const RobustnessGrid& grid);
void write_mae_curves_svg(const std::filesystem::path& path, const RobustnessGrid& grid);

void write_loss_csv(const std::filesystem::path& path, std::span<const double> epoch_loss);

}  // namespace avdoa
