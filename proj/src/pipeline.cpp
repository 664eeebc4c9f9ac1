#include "avdoa/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "avdoa/error.hpp"
#include "avdoa/kv_file.hpp"
#include "avdoa/nn/target.hpp"

namespace avdoa {

namespace {

constexpr std::uint64_t kTagAudioNoise = 0xA0D1;
constexpr std::uint64_t kTagSwap = 0x5A9;
constexpr std::size_t kPredictBatch = 256;

std::string fmt(double v, int digits = 2) {
  if (!std::isfinite(v)) return "NA";
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

std::string snr_label(const std::optional<double>& snr) { return snr ? fmt(*snr, 0) : "clean"; }

// Splits [0, n) into contiguous chunks, one per worker; each worker writes only
// its own slots, so the result matches the sequential loop exactly.
template <typename Fn>
void parallel_chunks(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
    pool.emplace_back([&, t, lo, hi] {
      try {
        if (lo < hi) fn(lo, hi);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

std::vector<FeatureRecord> extract_gcc(const Dataset& dataset, std::span<const std::size_t> positions,
                                       const FeatureOptions& options) {
  std::vector<FeatureRecord> out(positions.size());
  parallel_chunks(positions.size(), options.threads, [&](std::size_t lo, std::size_t hi) {
    FrameAudioSource audio(dataset);
    GccPhat gcc(options.fft_len, options.lags);
    for (std::size_t i = lo; i < hi; ++i) {
      const FrameRecord& rec = dataset.frames.at(positions[i]);
      MultichannelSignal frame = audio.get(positions[i]);
      if (options.snr_db) {
        frame = add_noise_at_snr(frame, *options.snr_db, mix_seed(options.seed, rec.frame_index, kTagAudioNoise));
      }
      const GccFeature f = gcc.feature(frame);
      out[i] = make_record(static_cast<std::uint32_t>(rec.frame_index), static_cast<std::uint16_t>(f.pairs),
                           static_cast<std::uint16_t>(f.lags.count()), f.values);
    }
  });
  return out;
}

std::vector<FeatureRecord> extract_visual(const Dataset& dataset, std::span<const std::size_t> positions,
                                          const FeatureOptions& options) {
  std::vector<DetectionFrame> dets;
  dets.reserve(positions.size());
  for (std::size_t p : positions) dets.push_back(dataset.detections.at(p));
  if (options.fdsp > 0.0) dets = swap_detections(dets, options.fdsp, mix_seed(options.seed, kTagSwap), options.swap_mode);

  const Intrinsics& in = dataset.camera.intrinsics;
  std::vector<FeatureRecord> out;
  out.reserve(dets.size());
  for (const auto& d : dets) {
    const VisualFeature v = encode_visual(d, in.width, in.height, options.visual_length, options.empty_visual_value);
    out.push_back(make_record(static_cast<std::uint32_t>(d.frame_index), 2,
                              static_cast<std::uint16_t>(v.length), v.values));
  }
  return out;
}

FeatureSet extract_features(const Dataset& dataset, std::span<const std::size_t> positions,
                            const FeatureOptions& options) {
  require(options.fdsp >= 0.0 && options.fdsp <= 1.0, ErrorCode::InvalidArgument, "fdsp must be in [0, 1]");
  FeatureSet fs;
  fs.sample_rate = dataset.sample_rate;
  fs.lags = options.lags;
  fs.gcc = extract_gcc(dataset, positions, options);
  fs.visual = extract_visual(dataset, positions, options);
  for (std::size_t p : positions) {
    const FrameRecord& rec = dataset.frames.at(p);
    fs.index.push_back({static_cast<std::uint32_t>(rec.frame_index), rec.timestamp_s});
    fs.labels.push_back(rec.azimuths());
  }
  return fs;
}

void save_features(const FeatureSet& features, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_feature_store(dir / "gcc.doaf", features.gcc);
  write_feature_index(dir / "gcc.idx", features.index);
  write_feature_store(dir / "visual.doaf", features.visual);
  write_feature_index(dir / "visual.idx", features.index);
  KeyValueFile meta;
  meta.set("sample_rate", fmt(features.sample_rate, 6));
  meta.set("lag_min", std::to_string(features.lags.min));
  meta.set("lag_max", std::to_string(features.lags.max));
  meta.set("frames", std::to_string(features.size()));
  {
    std::ofstream m(dir / "meta.txt");
    if (!m) throw Error(ErrorCode::IoError, "cannot write meta in " + dir.string());
    m << meta.to_string();
  }
  std::ofstream out(dir / "labels.jsonl");
  if (!out) throw Error(ErrorCode::IoError, "cannot write labels in " + dir.string());
  for (std::size_t i = 0; i < features.size(); ++i) {
    nlohmann::json j;
    j["frame_index"] = features.index[i].frame_index;
    j["azimuths"] = features.labels[i];
    out << j.dump() << "\n";
  }
  if (!out) throw Error(ErrorCode::IoError, "short write to labels");
}

FeatureSet load_features(const std::filesystem::path& dir) {
  FeatureSet fs;
  const KeyValueFile meta = KeyValueFile::load(dir / "meta.txt");
  fs.sample_rate = meta.get_double("sample_rate");
  fs.lags = LagRange{static_cast<int>(meta.get_int("lag_min")), static_cast<int>(meta.get_int("lag_max"))};
  fs.gcc = read_feature_store(dir / "gcc.doaf");
  fs.index = read_feature_index(dir / "gcc.idx");
  if (std::filesystem::exists(dir / "visual.doaf")) fs.visual = read_feature_store(dir / "visual.doaf");
  require(fs.gcc.size() == fs.index.size(), ErrorCode::FormatError, "gcc store and index differ in length");

  std::ifstream in(dir / "labels.jsonl");
  if (!in) throw Error(ErrorCode::FileNotFound, (dir / "labels.jsonl").string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto idx = j.at("frame_index").get<std::uint32_t>();
      require(fs.labels.size() < fs.index.size() && fs.index[fs.labels.size()].frame_index == idx,
              ErrorCode::FormatError, "labels not aligned with the feature index");
      fs.labels.push_back(j.at("azimuths").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::FormatError, std::string("labels.jsonl: ") + e.what());
    }
  }
  require(fs.labels.size() == fs.index.size(), ErrorCode::FormatError, "label count differs from features");
  for (std::size_t i = 0; i < fs.size(); ++i) {
    require(fs.gcc[i].frame_index == fs.index[i].frame_index, ErrorCode::FormatError, "gcc store order");
    if (!fs.visual.empty()) {
      require(fs.visual.size() == fs.size() && fs.visual[i].frame_index == fs.index[i].frame_index,
              ErrorCode::FormatError, "visual store not aligned with gcc store");
    }
  }
  return fs;
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "test") return Split::Test;
  if (name == "all") return Split::All;
  throw Error(ErrorCode::InvalidArgument, "unknown split '" + name + "'");
}

std::vector<std::size_t> split_rows(std::size_t n, Split split, double test_fraction) {
  require(test_fraction >= 0 && test_fraction < 1, ErrorCode::InvalidArgument, "test fraction must be in [0, 1)");
  const auto n_test = std::min(n, static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction)));
  std::size_t lo = 0, hi = n;
  if (split == Split::Train) hi = n - n_test;
  if (split == Split::Test) lo = n - n_test;
  std::vector<std::size_t> rows;
  for (std::size_t i = lo; i < hi; ++i) rows.push_back(i);
  return rows;
}

nn::TrainingSet make_training_set(const FeatureSet& features, std::span<const std::size_t> rows, double sigma_deg,
                                  bool with_visual) {
  require(!rows.empty(), ErrorCode::EmptyDataset, "no rows selected");
  require(!with_visual || !features.visual.empty(), ErrorCode::FileNotFound, "visual features are missing");
  const bool has_visual = with_visual;
  const std::size_t gcc_dim = features.gcc.at(rows[0]).values.size();
  const std::size_t vis_dim = has_visual ? features.visual.at(rows[0]).values.size() : 0;
  nn::TrainingSet ts{nn::Tensor(rows.size(), gcc_dim), nn::Tensor(rows.size(), vis_dim),
                     nn::Tensor(rows.size(), kNumDoaClasses)};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& g = features.gcc.at(rows[i]).values;
    require(g.size() == gcc_dim, ErrorCode::ShapeMismatch, "gcc records differ in size");
    std::copy(g.begin(), g.end(), ts.gcc.row(i).begin());
    if (has_visual) {
      const auto& v = features.visual.at(rows[i]).values;
      require(v.size() == vis_dim, ErrorCode::ShapeMismatch, "visual records differ in size");
      std::copy(v.begin(), v.end(), ts.vis.row(i).begin());
    }
    const auto target = nn::encode_target(features.labels.at(rows[i]), sigma_deg);
    std::copy(target.begin(), target.end(), ts.target.row(i).begin());
  }
  return ts;
}

std::vector<std::vector<double>> predict_doas(const nn::Network& net, const FeatureSet& features,
                                              std::span<const std::size_t> rows, double nms_deg) {
  const bool needs_visual = net.config().kind != nn::ModelKind::GccOnly;
  require(!needs_visual || !features.visual.empty(), ErrorCode::FileNotFound, "model needs visual features");
  std::vector<std::vector<double>> out;
  for (std::size_t start = 0; start < rows.size(); start += kPredictBatch) {
    const std::size_t stop = std::min(rows.size(), start + kPredictBatch);
    const auto batch = rows.subspan(start, stop - start);
    const nn::TrainingSet ts = make_training_set(features, batch, nn::kDefaultTargetSigmaDeg, needs_visual);
    const nn::ModelOutput y = net.predict(ts.gcc, ts.vis);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      out.push_back(decode_doa(y.posterior.row(i), features.labels.at(batch[i]).size(), nms_deg));
    }
  }
  return out;
}

std::vector<std::vector<double>> srp_doas(const FeatureSet& features, std::span<const std::size_t> rows,
                                          const MicArray& array, double nms_deg) {
  std::vector<std::vector<double>> out;
  for (std::size_t r : rows) {
    const FeatureRecord& rec = features.gcc.at(r);
    require(rec.cols == features.lags.count(), ErrorCode::ShapeMismatch, "gcc record width differs from lag range");
    GccFeature f;
    f.pairs = rec.rows;
    f.lags = features.lags;
    f.sample_rate = features.sample_rate;
    f.values.assign(rec.values.begin(), rec.values.end());
    out.push_back(decode_srp(srp_phat(f, array), features.labels.at(r).size(), nms_deg));
  }
  return out;
}

EvalSummary summarize(const std::vector<std::vector<double>>& pred, const std::vector<std::vector<double>>& gt,
                      std::vector<std::size_t> frame_indices) {
  EvalSummary s;
  s.overall = mae_acc(pred, gt);
  s.frame_indices = std::move(frame_indices);
  for (std::size_t n : {1u, 2u}) {
    std::vector<std::vector<double>> p, g;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (gt[i].size() != n) continue;
      p.push_back(pred[i]);
      g.push_back(gt[i]);
    }
    if (g.empty()) continue;
    (n == 1 ? s.single : s.dual) = mae_acc(p, g);
  }
  return s;
}

void write_summary_csv(const std::filesystem::path& path, const EvalSummary& summary) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  auto cells = [](const std::optional<EvalResult>& r) {
    return r ? fmt(r->mae) + "," + fmt(r->acc, 1) : std::string("NA,NA");
  };
  out << "n1_mae,n1_acc,n2_mae,n2_acc,overall_mae,overall_acc\n";
  out << cells(summary.single) << "," << cells(summary.dual) << "," << cells(summary.overall) << "\n";
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

std::vector<std::optional<double>> default_snr_levels() { return {-10.0, 0.0, 10.0, 20.0, std::nullopt}; }
std::vector<double> default_fdsp_levels() { return {0.0, 0.1, 0.3, 0.5, 0.7}; }

RobustnessGrid robustness_grid(const nn::Network& net, const Dataset& dataset, std::span<const std::size_t> positions,
                               const std::vector<std::optional<double>>& snr_levels,
                               const std::vector<double>& fdsp_levels, const FeatureOptions& base) {
  require(!positions.empty(), ErrorCode::EmptyDataset, "no frames for the robustness grid");
  require(!snr_levels.empty() && !fdsp_levels.empty(), ErrorCode::InvalidArgument, "empty grid");

  FeatureSet fs;
  std::vector<std::size_t> frame_indices;
  for (std::size_t p : positions) {
    const FrameRecord& rec = dataset.frames.at(p);
    fs.index.push_back({static_cast<std::uint32_t>(rec.frame_index), rec.timestamp_s});
    fs.labels.push_back(rec.azimuths());
    frame_indices.push_back(rec.frame_index);
  }
  std::vector<std::size_t> rows(positions.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;

  // Audio corruption depends only on the SNR and visual corruption only on
  // the FDSP, so each side is extracted once per level and then combined.
  std::vector<std::vector<FeatureRecord>> visual_by_fdsp;
  for (double fdsp : fdsp_levels) {
    FeatureOptions opt = base;
    opt.fdsp = fdsp;
    visual_by_fdsp.push_back(extract_visual(dataset, positions, opt));
  }

  RobustnessGrid grid{snr_levels, fdsp_levels, {}};
  for (const auto& snr : snr_levels) {
    FeatureOptions opt = base;
    opt.snr_db = snr;
    fs.gcc = extract_gcc(dataset, positions, opt);
    std::vector<GridCell> row;
    for (const auto& visual : visual_by_fdsp) {
      fs.visual = visual;
      const auto pred = predict_doas(net, fs, rows);
      const EvalResult r = mae_acc(pred, fs.labels);
      row.push_back({r.mae, r.acc});
    }
    grid.cells.push_back(std::move(row));
  }
  return grid;
}

void write_grid_csv(const std::filesystem::path& path, const RobustnessGrid& grid) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "snr_db";
  for (double f : grid.fdsp_levels) out << ",fdsp_" << fmt(100.0 * f, 0);
  out << "\n";
  for (std::size_t r = 0; r < grid.snr_levels.size(); ++r) {
    out << snr_label(grid.snr_levels[r]);
    for (const auto& c : grid.cells[r]) out << "," << fmt(c.mae) << "/" << fmt(c.acc, 1);
    out << "\n";
  }
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

void write_mae_curves_csv(const std::filesystem::path& path, const RobustnessGrid& grid) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "snr_db";
  for (double f : grid.fdsp_levels) out << ",mae_fdsp_" << fmt(100.0 * f, 0);
  out << "\n";
  for (std::size_t r = 0; r < grid.snr_levels.size(); ++r) {
    out << snr_label(grid.snr_levels[r]);
    for (const auto& c : grid.cells[r]) out << "," << fmt(c.mae, 4);
    out << "\n";
  }
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

void write_mae_curves_svg(const std::filesystem::path& path, const RobustnessGrid& grid) {
  const double width = 640, height = 400, left = 60, right = 150, top = 20, bottom = 50;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  double max_mae = 1.0;
  for (const auto& row : grid.cells)
    for (const auto& c : row) max_mae = std::max(max_mae, c.mae);
  const std::size_t n = grid.snr_levels.size();
  auto x_of = [&](std::size_t i) { return left + (n > 1 ? plot_w * static_cast<double>(i) / static_cast<double>(n - 1) : plot_w / 2); };
  auto y_of = [&](double mae) { return top + plot_h * (1.0 - mae / max_mae); };
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\"" << top + plot_h
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
      << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < n; ++i) {
    svg << "<text x=\"" << x_of(i) << "\" y=\"" << top + plot_h + 20 << "\" font-size=\"12\" text-anchor=\"middle\">"
        << snr_label(grid.snr_levels[i]) << "</text>\n";
  }
  for (int t = 0; t <= 4; ++t) {
    const double v = max_mae * t / 4.0;
    svg << "<text x=\"" << left - 8 << "\" y=\"" << y_of(v) + 4 << "\" font-size=\"12\" text-anchor=\"end\">" << fmt(v, 1)
        << "</text>\n";
  }
  svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 10
      << "\" font-size=\"13\" text-anchor=\"middle\">SNR (dB)</text>\n";
  svg << "<text x=\"15\" y=\"" << top + plot_h / 2 << "\" font-size=\"13\" transform=\"rotate(-90 15 "
      << top + plot_h / 2 << ")\" text-anchor=\"middle\">MAE (deg)</text>\n";
  for (std::size_t c = 0; c < grid.fdsp_levels.size(); ++c) {
    const char* color = colors[c % 6];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t r = 0; r < n; ++r) svg << x_of(r) << "," << y_of(grid.cells[r][c].mae) << " ";
    svg << "\"/>\n";
    svg << "<text x=\"" << left + plot_w + 10 << "\" y=\"" << top + 20 + 18 * static_cast<double>(c)
        << "\" font-size=\"12\" fill=\"" << color << "\">FDSP " << fmt(100.0 * grid.fdsp_levels[c], 0) << "%</text>\n";
  }
  svg << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << svg.str();
}

void write_loss_csv(const std::filesystem::path& path, std::span<const double> epoch_loss) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.precision(17);
  out << "epoch,loss\n";
  for (std::size_t i = 0; i < epoch_loss.size(); ++i) out << i + 1 << "," << epoch_loss[i] << "\n";
}

}  // namespace avdoa
