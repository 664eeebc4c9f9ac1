#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "avdoa/commands.hpp"
#include "avdoa/error.hpp"
#include "avdoa/nn/checkpoint.hpp"
#include "avdoa/pipeline.hpp"

using namespace avdoa;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

ScenarioConfig small_scenario(std::size_t frames, std::uint64_t seed) {
  ScenarioConfig sc;
  sc.frames = frames;
  sc.seed = seed;
  return sc;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = i;
  return r;
}

}  // namespace

TEST_CASE("all-visible scenario detects every frame") {
  ScenarioConfig sc = small_scenario(100, 1);
  sc.visibility_fraction = 1.0;
  const Dataset ds = simulate_dataset(sc);
  CHECK(detection_rate(ds.detections) == 100.0);
  for (const auto& f : ds.frames)
    for (const auto& s : f.sources) CHECK(s.visible);
}

TEST_CASE("visibility fraction controls the detection rate") {
  ScenarioConfig sc = small_scenario(2000, 2);
  sc.visibility_fraction = 0.1;
  const Dataset ds = simulate_dataset(sc);
  CHECK(std::fabs(detection_rate(ds.detections) - 10.0) <= 3.0);
}

TEST_CASE("two-source frames respect the separation floor") {
  ScenarioConfig sc = small_scenario(300, 3);
  sc.p_two_sources = 1.0;
  const Dataset ds = simulate_dataset(sc);
  for (const auto& f : ds.frames) {
    REQUIRE(f.sources.size() == 2);
    CHECK(angular_error(f.sources[0].azimuth_deg, f.sources[1].azimuth_deg) >= 10.0);
  }
}

TEST_CASE("scenario validation") {
  ScenarioConfig sc;
  sc.p_two_sources = 1.5;
  CHECK_THROWS_AS(sc.validate(), Error);
  sc = ScenarioConfig{};
  sc.distance_min = 3;
  sc.distance_max = 1;
  CHECK_THROWS_AS(sc.validate(), Error);
  sc = ScenarioConfig{};
  sc.frames = 0;
  CHECK_THROWS_AS(sc.validate(), Error);
}

TEST_CASE("dataset save and load preserve frames, labels and audio") {
  TempDir dir("avdoa_ds_io");
  ScenarioConfig sc = small_scenario(12, 4);
  sc.p_two_sources = 0.5;
  sc.visibility_fraction = 0.5;
  const Dataset ds = simulate_dataset(sc);
  save_dataset(ds, dir.path);
  const Dataset back = load_dataset(dir.path);
  REQUIRE(back.size() == ds.size());
  CHECK(back.detections == ds.detections);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back.frames[i].azimuths() == ds.frames[i].azimuths());
    for (const auto& s : back.frames[i].sources)
      CHECK(std::fabs(wrap_degrees(s.azimuth_deg - doa_from_position(s.position, back.array))) < 1e-6);
  }
  FrameAudioSource rendered(ds), stored(back);
  for (std::size_t i : {0u, 5u, 11u}) CHECK(rendered.get(i).channels == stored.get(i).channels);
}

TEST_CASE("manifest with an inconsistent azimuth is rejected") {
  TempDir dir("avdoa_ds_bad");
  save_dataset(simulate_dataset(small_scenario(3, 5)), dir.path);
  std::string text = slurp(dir.path / "manifest.jsonl");
  const auto pos = text.find("\"azimuth\":");
  REQUIRE(pos != std::string::npos);
  text.insert(pos + 10, "1");
  std::ofstream(dir.path / "manifest.jsonl", std::ios::binary) << text;
  CHECK_THROWS_AS(load_dataset(dir.path), Error);
}

TEST_CASE("features are deterministic and corruptions are independent") {
  const Dataset ds = simulate_dataset([] {
    ScenarioConfig sc = small_scenario(40, 6);
    sc.visibility_fraction = 0.6;
    return sc;
  }());
  const auto rows = iota_rows(ds.size());
  FeatureOptions clean;
  const FeatureSet a = extract_features(ds, rows, clean);
  CHECK(a.gcc.size() == 40);
  CHECK(a.gcc[0].rows == 6);
  CHECK(a.gcc[0].cols == 51);
  CHECK(a.visual[0].rows == 2);

  FeatureOptions threaded = clean;
  threaded.threads = 3;
  const FeatureSet b = extract_features(ds, rows, threaded);
  CHECK(b.gcc == a.gcc);
  CHECK(b.visual == a.visual);

  FeatureOptions noisy = clean;
  noisy.snr_db = 0.0;
  const FeatureSet n = extract_features(ds, rows, noisy);
  CHECK(n.gcc != a.gcc);
  CHECK(n.visual == a.visual);

  FeatureOptions swapped = clean;
  swapped.fdsp = 0.3;
  const FeatureSet s = extract_features(ds, rows, swapped);
  CHECK(s.gcc == a.gcc);
  CHECK(s.visual != a.visual);
}

TEST_CASE("feature directory round-trip") {
  TempDir dir("avdoa_feat_io");
  const Dataset ds = simulate_dataset(small_scenario(10, 7));
  const FeatureSet fs_a = extract_features(ds, iota_rows(10), FeatureOptions{});
  save_features(fs_a, dir.path / "f");
  const FeatureSet fs_b = load_features(dir.path / "f");
  CHECK(fs_b.gcc == fs_a.gcc);
  CHECK(fs_b.visual == fs_a.visual);
  CHECK(fs_b.labels == fs_a.labels);
  CHECK(fs_b.sample_rate == fs_a.sample_rate);
}

TEST_CASE("splits are contiguous and disjoint") {
  const auto train = split_rows(10, Split::Train);
  const auto test = split_rows(10, Split::Test);
  CHECK(train == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7});
  CHECK(test == std::vector<std::size_t>{8, 9});
  CHECK(split_rows(10, Split::All).size() == 10);
  CHECK_THROWS_AS(parse_split("dev"), Error);
}

TEST_CASE("summary csv has the N=1, N=2, overall columns") {
  TempDir dir("avdoa_summary");
  const auto s = summarize({{1}, {2, 30}}, {{0}, {30, 0}}, {0, 1});
  write_summary_csv(dir.path / "s.csv", s);
  const std::string text = slurp(dir.path / "s.csv");
  CHECK(text.rfind("n1_mae,n1_acc,n2_mae,n2_acc,overall_mae,overall_acc\n", 0) == 0);
  REQUIRE(s.single);
  REQUIRE(s.dual);
  CHECK(s.single->mae == 1.0);
  CHECK(s.dual->mae == 1.0);
}

TEST_CASE("srp baseline on clean single-source data") {
  TempDir dir("avdoa_baseline");
  ScenarioConfig sc = small_scenario(60, 8);
  save_dataset(simulate_dataset(sc), dir.path / "ds");
  const EvalSummary s = cmd_baseline(dir.path / "ds", dir.path / "out", BaselineOptions{});
  CHECK(s.overall.acc > 90.0);
  CHECK(fs::exists(dir.path / "out" / "results.jsonl"));
  CHECK(fs::exists(dir.path / "out" / "summary.csv"));
}

TEST_CASE("commands validate before writing anything") {
  TempDir dir("avdoa_validate");
  const fs::path out = dir.path / "out";
  CHECK_THROWS_AS(cmd_features(dir.path / "nope", out, FeaturesOptions{}), Error);
  FeaturesOptions bad;
  bad.fdsp_percent = 150;
  CHECK_THROWS_AS(cmd_features(dir.path, out, bad), Error);
  CHECK_THROWS_AS(cmd_eval(dir.path / "missing.ckpt", dir.path, out), Error);
  ScenarioConfig sc;
  sc.frames = 0;
  CHECK_THROWS_AS(cmd_simulate(sc, out), Error);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("train, eval and robustness commands") {
  TempDir dir("avdoa_cmds");
  ScenarioConfig sc = small_scenario(50, 9);
  sc.visibility_fraction = 0.5;
  cmd_simulate(sc, dir.path / "ds");
  cmd_features(dir.path / "ds", dir.path / "f", FeaturesOptions{});

  TrainOptions to;
  to.model = nn::ModelKind::Avaw;
  to.config.epochs = 2;
  to.config.batch_size = 16;
  to.config.hidden = {16};
  const auto trained = cmd_train(dir.path / "f", dir.path / "m", to);
  CHECK(trained.epoch_loss.size() == 2);
  CHECK(fs::exists(dir.path / "m" / "loss.csv"));
  const auto loaded = nn::load_checkpoint(dir.path / "m" / "model.ckpt");
  CHECK(nn::serialize_checkpoint(loaded) == nn::serialize_checkpoint(trained.network));

  const EvalSummary ev = cmd_eval(dir.path / "m" / "model.ckpt", dir.path / "f", dir.path / "e");
  CHECK(ev.overall.frame_count == 10);

  RobustnessOptions ro;
  const RobustnessGrid grid = cmd_robustness(dir.path / "m" / "model.ckpt", dir.path / "ds", dir.path / "r", ro);
  REQUIRE(grid.cells.size() == 5);
  for (const auto& row : grid.cells) CHECK(row.size() == 5);
  // The clean / 0 % cell is the uncorrupted evaluation.
  CHECK(grid.cells[4][0].mae == doctest::Approx(ev.overall.mae).epsilon(1e-12));
  CHECK(grid.cells[4][0].acc == doctest::Approx(ev.overall.acc).epsilon(1e-12));
  const std::string csv = slurp(dir.path / "r" / "grid.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  CHECK(csv.rfind("snr_db,fdsp_0,fdsp_10,fdsp_30,fdsp_50,fdsp_70\n", 0) == 0);
  CHECK(fs::exists(dir.path / "r" / "mae_vs_snr.csv"));
  CHECK(fs::exists(dir.path / "r" / "mae_vs_snr.svg"));

  // Deterministic grid.
  const RobustnessGrid again = cmd_robustness(dir.path / "m" / "model.ckpt", dir.path / "ds", dir.path / "r2", ro);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) CHECK(again.cells[i][j].mae == grid.cells[i][j].mae);
}

TEST_CASE("gcc-only training does not need the visual store") {
  TempDir dir("avdoa_gcc_only");
  cmd_simulate(small_scenario(30, 10), dir.path / "ds");
  cmd_features(dir.path / "ds", dir.path / "f", FeaturesOptions{});
  TrainOptions to;
  to.model = nn::ModelKind::GccOnly;
  to.config.epochs = 1;
  to.config.batch_size = 8;
  to.config.hidden = {8};
  const auto a = cmd_train(dir.path / "f", dir.path / "m1", to);
  fs::remove(dir.path / "f" / "visual.doaf");
  fs::remove(dir.path / "f" / "visual.idx");
  const auto b = cmd_train(dir.path / "f", dir.path / "m2", to);
  CHECK(slurp(dir.path / "m1" / "model.ckpt") == slurp(dir.path / "m2" / "model.ckpt"));
  const auto e1 = cmd_eval(dir.path / "m1" / "model.ckpt", dir.path / "f", dir.path / "e1");
  CHECK(e1.overall.frame_count == 6);
  (void)a;
  (void)b;
}
