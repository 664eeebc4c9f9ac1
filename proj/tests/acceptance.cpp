// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: avdoa_acceptance [--only N]...

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "avdoa/audio.hpp"
#include "avdoa/commands.hpp"
#include "avdoa/dataset.hpp"
#include "avdoa/eval.hpp"
#include "avdoa/gcc_phat.hpp"
#include "avdoa/geom.hpp"
#include "avdoa/nn/checkpoint.hpp"
#include "avdoa/nn/model.hpp"
#include "avdoa/nn/train.hpp"
#include "avdoa/pipeline.hpp"
#include "avdoa/rng.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace avdoa;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::size_t worker_count() { return std::max(1u, std::min(8u, std::thread::hardware_concurrency())); }

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = i;
  return r;
}

// Trains `kind` on the train split and evaluates on the test split.
EvalResult train_and_test(const FeatureSet& features, nn::ModelKind kind, const nn::TrainConfig& cfg,
                          nn::Network* out = nullptr) {
  const auto train_rows = split_rows(features.size(), Split::Train);
  const auto test_rows = split_rows(features.size(), Split::Test);
  const bool with_visual = kind != nn::ModelKind::GccOnly;
  const auto data = make_training_set(features, train_rows, cfg.target_sigma_deg, with_visual);
  auto result = nn::train(kind, data, cfg);
  const auto pred = predict_doas(result.network, features, test_rows);
  std::vector<std::vector<double>> gt;
  for (std::size_t r : test_rows) gt.push_back(features.labels[r]);
  if (out) *out = std::move(result.network);
  return mae_acc(pred, gt);
}

nn::TrainConfig small_training(std::uint64_t seed) {
  nn::TrainConfig cfg;
  cfg.hidden = {128, 128, 128};
  cfg.epochs = 10;
  cfg.seed = seed;
  return cfg;
}

// 1. GCC-PHAT against a time-domain PHAT correlation oracle.
Outcome gcc_oracle() {
  Rng rng(2024);
  int matches = 0, at_minus_d = 0;
  const std::size_t n = 8192;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = static_cast<int>(rng.below(51)) - 25;
    std::vector<double> base(n + 64);
    for (auto& v : base) v = rng.normal();
    const std::vector<double> l(base.begin() + 32, base.begin() + 32 + static_cast<long>(n));
    const std::vector<double> p(base.begin() + 32 - d, base.begin() + 32 - d + static_cast<long>(n));
    const auto g = gcc_phat_pair(l, p);
    const auto ref = oracle::phat_xcorr_time_domain(l, p, -25, 25, n);
    matches += oracle::argmax(g) == oracle::argmax(ref);
    at_minus_d += static_cast<int>(oracle::argmax(g)) - 25 == -d;
  }
  return {matches == 100 && at_minus_d == 100,
          fmt("argmax matches oracle %d/100, equals -delay %d/100", matches, at_minus_d)};
}

// 2. Finite-difference gradient suite.
Outcome gradients() {
  const std::vector<std::pair<const char*, double>> errs{
      {"dense", gradcheck::dense(1)},
      {"batchnorm", gradcheck::batchnorm(2)},
      {"relu", gradcheck::relu(3)},
      {"sigmoid", gradcheck::sigmoid(4)},
      {"softmax", gradcheck::softmax(5)},
      {"mse", gradcheck::mse(6)},
      {"avc", gradcheck::network(nn::ModelKind::Avc, 7)},
      {"avaw", gradcheck::network(nn::ModelKind::Avaw, 8)},
  };
  bool ok = true;
  std::string detail = "max rel err:";
  for (const auto& [name, e] : errs) {
    ok = ok && e < 1e-4;
    detail += fmt(" %s=%.2g", name, e);
  }
  return {ok, detail};
}

// 3. Zero-noise boxes against direct projection.
Outcome geometry() {
  Rng rng(7);
  const FaceSize face{};
  int good = 0;
  double worst_center = 0, worst_width = 0;
  for (int i = 0; i < 1000; ++i) {
    Intrinsics in;
    in.fu = in.fv = rng.uniform(300, 900);
    const auto cal = CameraCalibration::looking_along({rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0, 2)},
                                                      rng.uniform(-180, 180), in);
    // Back-project a random pixel at a random depth into the world.
    const double z = rng.uniform(0.5, 6.0);
    const double u = rng.uniform(0, in.width), v = rng.uniform(0, in.height);
    const Vec3 pc{(u - in.cu) * z / in.fu, (v - in.cv) * z / in.fv, z};
    const Vec3 rel = pc - cal.translation;
    const auto& r = cal.rotation;
    const WorldPoint pw{r[0] * rel.x + r[3] * rel.y + r[6] * rel.z, r[1] * rel.x + r[4] * rel.y + r[7] * rel.z,
                        r[2] * rel.x + r[5] * rel.y + r[8] * rel.z};
    const auto box = synthesize_bbox(pw, cal, face, NoiseCov3{0, 0, 0}, static_cast<std::uint64_t>(i));
    if (!box) continue;
    const Pixel direct = project_point(world_to_camera(pw, cal), cal);
    const double dc = std::hypot(box->u + box->w / 2 - direct.u, box->v + box->h / 2 - direct.v);
    const double dw = std::fabs(box->w / (in.fu * face.width / z) - 1.0);
    worst_center = std::max(worst_center, dc);
    worst_width = std::max(worst_width, dw);
    good += dc <= 0.5 && dw <= 0.01;
  }
  return {good == 1000, fmt("%d/1000 poses ok, worst center offset %.3g px, worst width error %.3g%%", good,
                            worst_center, 100 * worst_width)};
}

// 4. SRP-PHAT on clean single sources.
Outcome srp() {
  Rng rng(99);
  const MicArray array = MicArray::square(0.1);
  int hits = 0;
  for (int i = 0; i < 100; ++i) {
    const double az = rng.uniform(-180, 180);
    const PlacedSource src{synth_source(SourceKind::SpeechLikeAr, kDefaultFrameSeconds, 48000, 500 + static_cast<std::uint64_t>(i)), az};
    const auto feature = gcc_feature(render_array(std::span(&src, 1), array));
    const auto doa = decode_srp(srp_phat(feature, array), 1);
    hits += angular_error(doa[0], az) <= 5.0;
  }
  return {hits >= 95, fmt("%d/100 within 5 deg", hits)};
}

// 5. End-to-end learning with the audio-only model.
Outcome end_to_end() {
  ScenarioConfig sc;
  sc.frames = 4000;
  sc.seed = 0;
  const Dataset ds = simulate_dataset(sc);
  FeatureOptions fo;
  fo.threads = worker_count();
  const FeatureSet features = extract_features(ds, all_rows(ds.size()), fo);
  const EvalResult r = train_and_test(features, nn::ModelKind::GccOnly, small_training(0));
  return {r.mae < 10.0 && r.acc > 80.0, fmt("test MAE %.3f deg, ACC %.2f%% (%zu frames)", r.mae, r.acc, r.frame_count)};
}

// 6. Fusion against audio only at 0 dB with every source in view.
Outcome fusion() {
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    ScenarioConfig sc;
    sc.frames = 4000;
    sc.visibility_fraction = 1.0;
    sc.seed = seed;
    const Dataset ds = simulate_dataset(sc);
    FeatureOptions fo;
    fo.snr_db = 0.0;
    fo.seed = seed;
    fo.threads = worker_count();
    const FeatureSet features = extract_features(ds, all_rows(ds.size()), fo);
    const double dr = detection_rate(ds.detections);
    const EvalResult avc = train_and_test(features, nn::ModelKind::Avc, small_training(seed));
    const EvalResult gcc = train_and_test(features, nn::ModelKind::GccOnly, small_training(seed));
    wins += avc.mae <= gcc.mae;
    detail += fmt("%sseed %llu: DR %.0f%%, AVC %.3f vs GCC-only %.3f deg", seed ? "; " : "", static_cast<unsigned long long>(seed),
                  dr, avc.mae, gcc.mae);
  }
  return {wins == 3, fmt("%d/3 seeds AVC <= GCC-only (", wins) + detail + ")"};
}

// 7. Robustness grid ordering.
Outcome degradation() {
  int seeds_ok = 0;
  std::string detail;
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    ScenarioConfig sc;
    sc.frames = 3000;
    sc.visibility_fraction = 0.5;
    sc.seed = seed;
    const Dataset ds = simulate_dataset(sc);
    FeatureOptions fo;
    fo.seed = seed;
    fo.threads = worker_count();
    const auto train_rows = split_rows(ds.size(), Split::Train);
    const auto test_rows = split_rows(ds.size(), Split::Test);
    const FeatureSet train_features = extract_features(ds, train_rows, fo);
    const nn::TrainConfig cfg = small_training(seed);
    const auto trained = nn::train(nn::ModelKind::Avaw, make_training_set(train_features, all_rows(train_features.size())), cfg);
    const RobustnessGrid grid =
        robustness_grid(trained.network, ds, test_rows, default_snr_levels(), default_fdsp_levels(), fo);
    // Rows: -10, 0, 10, 20, clean.
    bool ok = true;
    std::string cols;
    for (std::size_t c = 0; c < grid.fdsp_levels.size(); ++c) {
      ok = ok && grid.cells[0][c].mae > grid.cells[3][c].mae;
      cols += fmt(" %.1f>%.1f", grid.cells[0][c].mae, grid.cells[3][c].mae);
    }
    seeds_ok += ok;
    detail += fmt("%sseed %llu:", seed ? "; " : "", static_cast<unsigned long long>(seed)) + cols;
  }
  return {seeds_ok == 3, fmt("%d/3 seeds with MAE(-10 dB) > MAE(20 dB) in every FDSP column (", seeds_ok) + detail + ")"};
}

// 8. Adaptive-weight contract.
Outcome avaw_contract() {
  nn::ModelConfig cfg;
  cfg.kind = nn::ModelKind::Avaw;
  cfg.hidden = {16, 16, 16};
  nn::Network avaw(cfg, 3);
  Rng rng(3);
  nn::Tensor gcc(10000, 306), vis(10000, 102);
  for (auto& v : gcc.data()) v = rng.uniform(-1, 1);
  for (auto& v : vis.data()) v = rng.uniform();
  const auto out = avaw.predict(gcc, vis);
  double worst_sum = 0;
  for (std::size_t r = 0; r < 10000; ++r)
    worst_sum = std::max(worst_sum, std::fabs(out.weights(r, 0) + out.weights(r, 1) + out.weights(r, 2) - 1.0));

  avaw.weight_net()[1].weight.fill(0.0);
  avaw.weight_net()[1].bias.fill(0.0);
  cfg.kind = nn::ModelKind::Avc;
  nn::Network avc(cfg, 4);
  avc.trunk_dense() = avaw.trunk_dense();
  avc.trunk_norm() = avaw.trunk_norm();
  nn::Tensor gs = gcc, vs = vis;
  for (auto& v : gs.data()) v /= 3.0;
  for (auto& v : vs.data()) v /= 3.0;
  const auto a = avaw.predict(gcc, vis);
  const auto c = avc.predict(gs, vs);
  double worst_diff = 0;
  for (std::size_t i = 0; i < a.posterior.size(); ++i)
    worst_diff = std::max(worst_diff, std::fabs(a.posterior.data()[i] - c.posterior.data()[i]));
  return {worst_sum <= 1e-9 && worst_diff <= 1e-9,
          fmt("max |sum(w) - 1| = %.2g over 10^4 inputs; max |AVAW - AVC(x/3)| = %.2g", worst_sum, worst_diff)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 9. Two runs of simulate -> features -> train -> eval.
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "avdoa_acceptance_determinism";
  fs::remove_all(root);
  auto pipeline = [&](const std::string& tag) {
    const fs::path dir = root / tag;
    ScenarioConfig sc;
    sc.frames = 400;
    sc.p_two_sources = 0.3;
    sc.visibility_fraction = 0.5;
    sc.seed = 5;
    cmd_simulate(sc, dir / "dataset");
    FeaturesOptions fo;
    fo.snr_db = 10.0;
    fo.fdsp_percent = 30;
    fo.seed = 5;
    fo.threads = tag == "a" ? 1 : 3;
    cmd_features(dir / "dataset", dir / "features", fo);
    TrainOptions to;
    to.model = nn::ModelKind::Avaw;
    to.config.hidden = {32, 32, 32};
    to.config.epochs = 3;
    to.config.batch_size = 64;
    to.config.seed = 5;
    cmd_train(dir / "features", dir / "model", to);
    cmd_eval(dir / "model" / "model.ckpt", dir / "features", dir / "eval");
    return dir;
  };
  const fs::path a = pipeline("a"), b = pipeline("b");
  const bool same_ckpt = slurp(a / "model" / "model.ckpt") == slurp(b / "model" / "model.ckpt");
  const bool same_summary = slurp(a / "eval" / "summary.csv") == slurp(b / "eval" / "summary.csv");
  const bool same_results = slurp(a / "eval" / "results.jsonl") == slurp(b / "eval" / "results.jsonl");
  const bool same_features = slurp(a / "features" / "gcc.doaf") == slurp(b / "features" / "gcc.doaf") &&
                             slurp(a / "features" / "visual.doaf") == slurp(b / "features" / "visual.doaf");
  fs::remove_all(root);
  return {same_ckpt && same_summary && same_results && same_features,
          fmt("checkpoint %s, summary %s, per-frame results %s, feature stores %s (1 vs 3 threads)",
              same_ckpt ? "identical" : "DIFFERENT", same_summary ? "identical" : "DIFFERENT",
              same_results ? "identical" : "DIFFERENT", same_features ? "identical" : "DIFFERENT")};
}

// 10. Metric unit checks.
Outcome metrics() {
  const bool wrap = std::fabs(angular_error(-179, 179) - 2.0) < 1e-12 && std::fabs(angular_error(90, -90) - 180.0) < 1e-12;
  const auto boundary = mae_acc({{5.0}}, {{0.0}});
  const bool inclusive = boundary.acc == 100.0;
  Rng rng(10);
  int agree = 0;
  for (int i = 0; i < 1000; ++i) {
    const double g0 = rng.uniform(-180, 180), g1 = rng.uniform(-180, 180);
    const double p0 = rng.uniform(-180, 180), p1 = rng.uniform(-180, 180);
    const auto r = mae_acc({{p0, p1}}, {{g0, g1}});
    agree += std::fabs(r.mae * 2.0 - oracle::best_pair_error(p0, p1, g0, g1)) < 1e-9;
  }
  return {wrap && inclusive && agree == 1000,
          fmt("wrap cases %s, 5 deg counts as correct: %s, N=2 assignment matches oracle %d/1000", wrap ? "ok" : "WRONG",
              inclusive ? "yes" : "no", agree)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "gcc_phat_oracle", 10, gcc_oracle},
      {2, "gradient_suite", 30, gradients},
      {3, "geometry_round_trip", 5, geometry},
      {4, "srp_phat_baseline", 60, srp},
      {5, "end_to_end_learning", 600, end_to_end},
      {6, "fusion_benefit", 1800, fusion},
      {7, "degradation_monotonicity", 1800, degradation},
      {8, "avaw_contract", 60, avaw_contract},
      {9, "determinism", 600, determinism},
      {10, "metrics", 10, metrics},
  };
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only.push_back(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--only N]...\n", argv[0]);
      return 2;
    }
  }

  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("[%s] %2d %s: %s; %.1f s (budget %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                secs, c.budget_s, in_time ? "" : ", EXCEEDED");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
