#include "avdoa/commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "avdoa/error.hpp"
#include "avdoa/nn/checkpoint.hpp"

namespace avdoa {

namespace fs = std::filesystem;

namespace {

void require_dir(const fs::path& dir, const char* what) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::FileNotFound, std::string(what) + " not found: " + dir.string());
}

void make_out_dir(const fs::path& dir) {
  require(!dir.empty(), ErrorCode::InvalidArgument, "an output directory is required (--out)");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

void validate_snr(const std::optional<double>& snr) {
  require(!snr || std::isfinite(*snr), ErrorCode::InvalidArgument, "SNR must be finite");
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  return rows;
}

std::vector<std::size_t> frame_indices_of(const FeatureSet& features, std::span<const std::size_t> rows) {
  std::vector<std::size_t> out;
  for (std::size_t r : rows) out.push_back(features.index.at(r).frame_index);
  return out;
}

EvalSummary write_evaluation(const fs::path& out_dir, const std::vector<std::vector<double>>& pred,
                             const std::vector<std::vector<double>>& gt, std::vector<std::size_t> frame_indices) {
  EvalSummary summary = summarize(pred, gt, frame_indices);
  make_out_dir(out_dir);
  write_results_jsonl(out_dir / "results.jsonl", summary.frame_indices, summary.overall);
  write_summary_csv(out_dir / "summary.csv", summary);
  return summary;
}

}  // namespace

SimulateReport cmd_simulate(const ScenarioConfig& scenario, const fs::path& out_dir) {
  scenario.validate();
  require(!out_dir.empty(), ErrorCode::InvalidArgument, "an output directory is required (--out)");
  const Dataset dataset = simulate_dataset(scenario);
  make_out_dir(out_dir);
  save_dataset(dataset, out_dir);
  return {dataset.size(), detection_rate(dataset.detections)};
}

void cmd_features(const fs::path& dataset_dir, const fs::path& out_dir, const FeaturesOptions& options) {
  validate_snr(options.snr_db);
  require(options.fdsp_percent >= 0 && options.fdsp_percent <= 100, ErrorCode::InvalidArgument,
          "--fdsp must be a percentage in [0, 100]");
  require(options.threads >= 1, ErrorCode::InvalidArgument, "threads must be at least 1");
  require(!out_dir.empty(), ErrorCode::InvalidArgument, "an output directory is required (--out)");
  require_dir(dataset_dir, "dataset");
  const Dataset dataset = load_dataset(dataset_dir);
  require(dataset.size() > 0, ErrorCode::EmptyDataset, "dataset has no frames");

  FeatureOptions fo;
  fo.snr_db = options.snr_db;
  fo.fdsp = options.fdsp_percent / 100.0;
  fo.seed = options.seed;
  fo.threads = options.threads;
  const auto rows = all_rows(dataset.size());
  const FeatureSet features = extract_features(dataset, rows, fo);
  make_out_dir(out_dir);
  save_features(features, out_dir);
}

nn::TrainResult cmd_train(const fs::path& features_dir, const fs::path& out_dir, const TrainOptions& options) {
  options.config.validate();
  require(!out_dir.empty(), ErrorCode::InvalidArgument, "an output directory is required (--out)");
  require_dir(features_dir, "feature directory");
  const FeatureSet features = load_features(features_dir);
  const bool with_visual = options.model != nn::ModelKind::GccOnly;
  const auto rows = split_rows(features.size(), options.split);
  const nn::TrainingSet data = make_training_set(features, rows, options.config.target_sigma_deg, with_visual);

  nn::EpochCallback cb;
  if (options.verbose) {
    cb = [](std::size_t epoch, double loss) { std::cerr << "epoch " << epoch + 1 << " loss " << loss << "\n"; };
  }
  nn::TrainResult result = nn::train(options.model, data, options.config, cb);

  make_out_dir(out_dir);
  nn::save_checkpoint(result.network, out_dir / "model.ckpt");
  write_loss_csv(out_dir / "loss.csv", result.epoch_loss);
  std::ofstream cfg(out_dir / "train_config.txt");
  cfg << "model = " << nn::to_string(options.model) << "\n" << options.config.to_kv().to_string();
  if (!cfg) throw Error(ErrorCode::IoError, "cannot write train_config.txt");
  return result;
}

EvalSummary cmd_eval(const fs::path& checkpoint, const fs::path& features_dir, const fs::path& out_dir, Split split) {
  require(!out_dir.empty(), ErrorCode::InvalidArgument, "an output directory is required (--out)");
  const nn::Network net = nn::load_checkpoint(checkpoint);
  require_dir(features_dir, "feature directory");
  const FeatureSet features = load_features(features_dir);
  const auto rows = split_rows(features.size(), split);
  require(!rows.empty(), ErrorCode::EmptyDataset, "the selected split is empty");
  const auto pred = predict_doas(net, features, rows);
  std::vector<std::vector<double>> gt;
  for (std::size_t r : rows) gt.push_back(features.labels[r]);
  return write_evaluation(out_dir, pred, gt, frame_indices_of(features, rows));
}

RobustnessGrid cmd_robustness(const fs::path& checkpoint, const fs::path& dataset_dir, const fs::path& out_dir,
                              const RobustnessOptions& options) {
  require(!out_dir.empty(), ErrorCode::InvalidArgument, "an output directory is required (--out)");
  require(!options.snr_levels.empty() && !options.fdsp_percent.empty(), ErrorCode::InvalidArgument,
          "robustness grid needs at least one SNR and one FDSP level");
  for (const auto& s : options.snr_levels) validate_snr(s);
  std::vector<double> fdsp;
  for (double p : options.fdsp_percent) {
    require(p >= 0 && p <= 100, ErrorCode::InvalidArgument, "FDSP levels must be percentages in [0, 100]");
    fdsp.push_back(p / 100.0);
  }
  const nn::Network net = nn::load_checkpoint(checkpoint);
  require_dir(dataset_dir, "dataset");
  const Dataset dataset = load_dataset(dataset_dir);
  const auto positions = split_rows(dataset.size(), options.split);
  require(!positions.empty(), ErrorCode::EmptyDataset, "the selected split is empty");

  FeatureOptions base;
  base.seed = options.seed;
  base.threads = options.threads;
  const RobustnessGrid grid = robustness_grid(net, dataset, positions, options.snr_levels, fdsp, base);
  make_out_dir(out_dir);
  write_grid_csv(out_dir / "grid.csv", grid);
  write_mae_curves_csv(out_dir / "mae_vs_snr.csv", grid);
  if (options.svg) write_mae_curves_svg(out_dir / "mae_vs_snr.svg", grid);
  return grid;
}

EvalSummary cmd_baseline(const fs::path& dataset_dir, const fs::path& out_dir, const BaselineOptions& options) {
  require(!out_dir.empty(), ErrorCode::InvalidArgument, "an output directory is required (--out)");
  validate_snr(options.snr_db);
  require_dir(dataset_dir, "dataset");
  const Dataset dataset = load_dataset(dataset_dir);
  const auto positions = split_rows(dataset.size(), options.split);
  require(!positions.empty(), ErrorCode::EmptyDataset, "the selected split is empty");

  FeatureOptions fo;
  fo.snr_db = options.snr_db;
  fo.seed = options.seed;
  fo.threads = options.threads;
  FeatureSet features;
  features.sample_rate = dataset.sample_rate;
  features.lags = fo.lags;
  features.gcc = extract_gcc(dataset, positions, fo);
  for (std::size_t p : positions) {
    features.index.push_back({static_cast<std::uint32_t>(dataset.frames[p].frame_index), dataset.frames[p].timestamp_s});
    features.labels.push_back(dataset.frames[p].azimuths());
  }
  const auto rows = all_rows(features.size());
  const auto pred = srp_doas(features, rows, dataset.array);
  return write_evaluation(out_dir, pred, features.labels, frame_indices_of(features, rows));
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    const std::string tok = item.substr(b, e - b + 1);
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == tok.size() && std::isfinite(v), ErrorCode::InvalidArgument, "not a number: '" + tok + "'");
    out.push_back(v);
  }
  require(!out.empty(), ErrorCode::InvalidArgument, "empty list");
  return out;
}

std::vector<std::optional<double>> parse_snr_levels(const std::string& text) {
  std::vector<std::optional<double>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const std::string tok = item.substr(b, item.find_last_not_of(" \t") - b + 1);
    if (tok == "clean" || tok == "inf") {
      out.push_back(std::nullopt);
    } else {
      out.push_back(parse_number_list(tok).front());
    }
  }
  require(!out.empty(), ErrorCode::InvalidArgument, "empty SNR list");
  return out;
}

}  // namespace avdoa
