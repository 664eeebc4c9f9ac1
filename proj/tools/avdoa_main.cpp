#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "avdoa/commands.hpp"
#include "avdoa/error.hpp"
#include "avdoa/kv_file.hpp"
#include "avdoa/nn/model.hpp"

namespace fs = std::filesystem;
using namespace avdoa;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
  CLI::Option* seed_opt = nullptr;
};

std::optional<KeyValueFile> load_config(const Globals& g) {
  if (g.config.empty()) return std::nullopt;
  return KeyValueFile::load(g.config);
}

std::optional<double> parse_snr(const std::string& text) {
  if (text.empty() || text == "clean" || text == "inf") return std::nullopt;
  return parse_number_list(text).front();
}

void print_summary(const EvalSummary& s) {
  auto line = [](const char* name, const std::optional<EvalResult>& r) {
    if (r) std::cout << name << ": MAE " << r->mae << " deg, ACC " << r->acc << " % (" << r->frame_count << " frames)\n";
  };
  line("N=1", s.single);
  line("N=2", s.dual);
  line("overall", s.overall);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-speaker direction-of-arrival estimation from audio and face detections"};
  app.require_subcommand(1);
  Globals g;
  g.seed_opt = app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--config", g.config, "Key = value configuration file");
  app.add_option("--out", g.out, "Output directory");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Synthesize a dataset (audio, manifest, detections)");
  sim->fallthrough();
  std::size_t frames = 0;
  double p_two = -1, visibility = -1;
  std::string source;
  auto* frames_opt = sim->add_option("--frames", frames, "Number of frames");
  auto* p_two_opt = sim->add_option("--p-two", p_two, "Probability of two concurrent sources");
  auto* vis_opt = sim->add_option("--visibility", visibility, "Fraction of frames with sources in view");
  auto* source_opt = sim->add_option("--source", source, "white | speech_like_ar | wav");

  // features
  auto* feat = app.add_subcommand("features", "Extract GCC-PHAT and visual feature stores");
  feat->fallthrough();
  std::string dataset_dir, features_dir, checkpoint;
  std::string snr_text;
  double fdsp_percent = -1;
  std::size_t threads = 1;
  feat->add_option("dataset", dataset_dir, "Dataset directory")->required();
  auto* feat_snr = feat->add_option("--snr", snr_text, "Add white noise at this SNR (dB) before extraction");
  auto* feat_fdsp = feat->add_option("--fdsp", fdsp_percent, "Percent of frames whose detections are swapped");
  feat->add_option("--threads", threads, "Worker threads (results do not depend on it)");

  // train
  auto* tr = app.add_subcommand("train", "Train a model on a feature directory");
  tr->fallthrough();
  std::string model = "avc", split_text;
  std::size_t epochs = 0, batch = 0;
  double lr = 0;
  std::string widths;
  bool verbose = false;
  tr->add_option("features", features_dir, "Feature directory")->required();
  tr->add_option("--model", model, "avc | avaw | gcc_only")->capture_default_str();
  auto* epochs_opt = tr->add_option("--epochs", epochs, "Training epochs");
  auto* batch_opt = tr->add_option("--batch", batch, "Batch size");
  auto* lr_opt = tr->add_option("--lr", lr, "Adam learning rate");
  auto* widths_opt = tr->add_option("--widths", widths, "Hidden widths, comma separated");
  tr->add_option("--split", split_text, "train | test | all (default train)");
  tr->add_flag("--verbose", verbose, "Print the loss after every epoch");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a feature directory");
  ev->fallthrough();
  ev->add_option("checkpoint", checkpoint, "Checkpoint file")->required();
  ev->add_option("features", features_dir, "Feature directory")->required();
  ev->add_option("--split", split_text, "train | test | all (default test)");

  // robustness
  auto* rb = app.add_subcommand("robustness", "MAE/ACC grid over audio SNR and swapped detections");
  rb->fallthrough();
  std::string snr_levels = "-10,0,10,20,clean", fdsp_levels = "0,10,30,50,70";
  bool no_svg = false;
  rb->add_option("checkpoint", checkpoint, "Checkpoint file")->required();
  rb->add_option("dataset", dataset_dir, "Dataset directory")->required();
  rb->add_option("--snr-levels", snr_levels, "SNR rows in dB; 'clean' for no noise")->capture_default_str();
  rb->add_option("--fdsp-levels", fdsp_levels, "FDSP columns in percent")->capture_default_str();
  rb->add_option("--split", split_text, "train | test | all (default test)");
  rb->add_option("--threads", threads, "Worker threads (results do not depend on it)");
  rb->add_flag("--no-svg", no_svg, "Skip the SVG chart");

  // baseline
  auto* bl = app.add_subcommand("baseline", "SRP-PHAT baseline on a dataset");
  bl->fallthrough();
  bl->add_option("dataset", dataset_dir, "Dataset directory")->required();
  auto* bl_snr = bl->add_option("--snr", snr_text, "Add white noise at this SNR (dB)");
  bl->add_option("--split", split_text, "train | test | all (default all)");
  bl->add_option("--threads", threads, "Worker threads (results do not depend on it)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const auto cfg = load_config(g);
    const bool seed_given = g.seed_opt->count() > 0;

    if (sim->parsed()) {
      ScenarioConfig sc = cfg ? ScenarioConfig::from_kv(*cfg, fs::path(g.config).parent_path()) : ScenarioConfig{};
      if (*frames_opt) sc.frames = frames;
      if (*p_two_opt) sc.p_two_sources = p_two;
      if (*vis_opt) sc.visibility_fraction = visibility;
      if (*source_opt) sc.source_kind = parse_source_kind(source);
      if (seed_given) sc.seed = g.seed;
      const SimulateReport r = cmd_simulate(sc, g.out);
      std::cout << "wrote " << r.frames << " frames to " << g.out << " (detection rate " << r.detection_rate
                << " %)\n";
    } else if (feat->parsed()) {
      FeaturesOptions fo;
      if (cfg) {
        if (cfg->has("snr")) fo.snr_db = parse_snr(cfg->get_string("snr", ""));
        fo.fdsp_percent = cfg->get_double("fdsp", 0.0);
        fo.seed = static_cast<std::uint64_t>(cfg->get_int("seed", 0));
      }
      if (*feat_snr) fo.snr_db = parse_snr(snr_text);
      if (*feat_fdsp) fo.fdsp_percent = fdsp_percent;
      if (seed_given) fo.seed = g.seed;
      fo.threads = threads;
      cmd_features(dataset_dir, g.out, fo);
      std::cout << "wrote features to " << g.out << "\n";
    } else if (tr->parsed()) {
      TrainOptions to;
      to.model = nn::parse_model_kind(model);
      if (cfg) to.config = nn::TrainConfig::from_kv(*cfg);
      if (*epochs_opt) to.config.epochs = epochs;
      if (*batch_opt) to.config.batch_size = batch;
      if (*lr_opt) to.config.adam.learning_rate = lr;
      if (*widths_opt) {
        to.config.hidden.clear();
        for (double w : parse_number_list(widths)) {
          require(w >= 1 && w == static_cast<double>(static_cast<std::size_t>(w)), ErrorCode::InvalidArgument,
                  "widths must be positive integers");
          to.config.hidden.push_back(static_cast<std::size_t>(w));
        }
      }
      if (seed_given) to.config.seed = g.seed;
      to.split = split_text.empty() ? Split::Train : parse_split(split_text);
      to.verbose = verbose;
      const auto result = cmd_train(features_dir, g.out, to);
      std::cout << "final loss " << result.epoch_loss.back() << "; checkpoint " << (fs::path(g.out) / "model.ckpt").string()
                << "\n";
    } else if (ev->parsed()) {
      const Split split = split_text.empty() ? Split::Test : parse_split(split_text);
      print_summary(cmd_eval(checkpoint, features_dir, g.out, split));
    } else if (rb->parsed()) {
      RobustnessOptions ro;
      if (cfg) {
        if (cfg->has("snr_levels")) snr_levels = cfg->get_string("snr_levels", "");
        if (cfg->has("fdsp_levels")) fdsp_levels = cfg->get_string("fdsp_levels", "");
        ro.seed = static_cast<std::uint64_t>(cfg->get_int("seed", 0));
      }
      ro.snr_levels = parse_snr_levels(snr_levels);
      ro.fdsp_percent = parse_number_list(fdsp_levels);
      if (seed_given) ro.seed = g.seed;
      ro.split = split_text.empty() ? Split::Test : parse_split(split_text);
      ro.threads = threads;
      ro.svg = !no_svg;
      cmd_robustness(checkpoint, dataset_dir, g.out, ro);
      std::cout << "wrote robustness grid to " << g.out << "\n";
    } else if (bl->parsed()) {
      BaselineOptions bo;
      if (*bl_snr) bo.snr_db = parse_snr(snr_text);
      if (seed_given) bo.seed = g.seed;
      bo.split = split_text.empty() ? Split::All : parse_split(split_text);
      bo.threads = threads;
      print_summary(cmd_baseline(dataset_dir, g.out, bo));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
