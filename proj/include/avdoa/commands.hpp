#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "avdoa/dataset.hpp"
#include "avdoa/nn/train.hpp"
#include "avdoa/pipeline.hpp"

// Drivers behind the command-line subcommands. Each one loads and validates
// every input before it creates the output directory.
namespace avdoa {

struct SimulateReport {
  std::size_t frames = 0;
  double detection_rate = 0.0;
};

SimulateReport cmd_simulate(const ScenarioConfig& scenario, const std::filesystem::path& out_dir);

struct FeaturesOptions {
  std::optional<double> snr_db;
  double fdsp_percent = 0.0;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

void cmd_features(const std::filesystem::path& dataset_dir, const std::filesystem::path& out_dir,
                  const FeaturesOptions& options);

struct TrainOptions {
  nn::ModelKind model = nn::ModelKind::Avc;
  nn::TrainConfig config{};
  Split split = Split::Train;
  bool verbose = false;
};

// Writes model.ckpt, loss.csv and train_config.txt.
nn::TrainResult cmd_train(const std::filesystem::path& features_dir, const std::filesystem::path& out_dir,
                          const TrainOptions& options);

// Writes results.jsonl and summary.csv.
EvalSummary cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& features_dir,
                     const std::filesystem::path& out_dir, Split split = Split::Test);

struct RobustnessOptions {
  std::vector<std::optional<double>> snr_levels = default_snr_levels();
  std::vector<double> fdsp_percent = {0, 10, 30, 50, 70};
  std::uint64_t seed = 0;
  Split split = Split::Test;
  std::size_t threads = 1;
  bool svg = true;
};

// Writes grid.csv, mae_vs_snr.csv and (optionally) mae_vs_snr.svg.
RobustnessGrid cmd_robustness(const std::filesystem::path& checkpoint, const std::filesystem::path& dataset_dir,
                              const std::filesystem::path& out_dir, const RobustnessOptions& options);

struct BaselineOptions {
  std::optional<double> snr_db;
  std::uint64_t seed = 0;
  Split split = Split::All;
  std::size_t threads = 1;
};

// SRP-PHAT over the dataset's own array geometry; writes results.jsonl and summary.csv.
EvalSummary cmd_baseline(const std::filesystem::path& dataset_dir, const std::filesystem::path& out_dir,
                         const BaselineOptions& options);

// Parses "-10,0,10,20,clean" style lists; "clean" (or "inf") means no added noise.
std::vector<std::optional<double>> parse_snr_levels(const std::string& text);
std::vector<double> parse_number_list(const std::string& text);

}  // namespace avdoa
