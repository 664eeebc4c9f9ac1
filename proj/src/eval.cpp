#include "avdoa/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "avdoa/error.hpp"
#include "avdoa/geom.hpp"

namespace avdoa {

std::size_t azimuth_to_class(double azimuth_deg) {
  const double w = wrap_degrees(std::round(azimuth_deg));
  return static_cast<std::size_t>(w + 180.0) % kNumDoaClasses;
}

double angular_error(double a_deg, double b_deg) {
  const double d = std::abs(wrap_degrees(a_deg) - wrap_degrees(b_deg));
  return std::min(d, 360.0 - d);
}

std::vector<double> decode_doa(std::span<const double> posterior, std::size_t n_sources,
                               double min_separation_deg) {
  const std::size_t n = posterior.size();
  require(n == kNumDoaClasses, ErrorCode::ShapeMismatch, "posterior must have 360 entries");
  require(n_sources >= 1 && n_sources <= n, ErrorCode::InvalidArgument, "bad source count");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return posterior[a] > posterior[b]; });

  std::vector<std::size_t> picked;
  auto separated = [&](std::size_t bin) {
    return std::all_of(picked.begin(), picked.end(), [&](std::size_t p) {
      return angular_error(class_to_azimuth(bin), class_to_azimuth(p)) >= min_separation_deg;
    });
  };
  auto is_peak = [&](std::size_t i) {
    const double v = posterior[i];
    return v >= posterior[(i + n - 1) % n] && v >= posterior[(i + 1) % n];
  };
  auto taken = [&](std::size_t bin) { return std::find(picked.begin(), picked.end(), bin) != picked.end(); };

  for (std::size_t bin : order) {
    if (picked.size() == n_sources) break;
    if (is_peak(bin) && separated(bin)) picked.push_back(bin);
  }
  for (std::size_t bin : order) {
    if (picked.size() == n_sources) break;
    if (!taken(bin) && separated(bin)) picked.push_back(bin);
  }
  for (std::size_t bin : order) {
    if (picked.size() == n_sources) break;
    if (!taken(bin)) picked.push_back(bin);
  }

  std::vector<double> out;
  out.reserve(picked.size());
  for (std::size_t bin : picked) out.push_back(class_to_azimuth(bin));
  return out;
}

EvalResult mae_acc(const std::vector<std::vector<double>>& pred_sets,
                   const std::vector<std::vector<double>>& gt_sets, double allowance_deg) {
  require(pred_sets.size() == gt_sets.size(), ErrorCode::CardinalityMismatch, "frame counts differ");
  require(!gt_sets.empty(), ErrorCode::EmptyDataset, "no frames to evaluate");

  EvalResult result;
  double total_error = 0.0;
  std::size_t correct = 0;
  for (std::size_t f = 0; f < gt_sets.size(); ++f) {
    const auto& gt = gt_sets[f];
    const auto& pred = pred_sets[f];
    require(pred.size() == gt.size(), ErrorCode::CardinalityMismatch,
            "frame " + std::to_string(f) + ": prediction count differs from ground truth");
    require(gt.size() <= 8, ErrorCode::InvalidArgument, "too many sources for exhaustive assignment");

    std::vector<std::size_t> perm(gt.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::size_t> best = perm;
    double best_cost = INFINITY;
    do {
      double cost = 0.0;
      for (std::size_t i = 0; i < gt.size(); ++i) cost += angular_error(gt[i], pred[perm[i]]);
      if (cost < best_cost) {
        best_cost = cost;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));

    FrameErrors fe;
    fe.gt = gt;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      fe.pred.push_back(pred[best[i]]);
      const double e = angular_error(gt[i], pred[best[i]]);
      fe.errors.push_back(e);
      total_error += e;
      if (e <= allowance_deg) ++correct;
    }
    result.pair_count += gt.size();
    result.frames.push_back(std::move(fe));
  }
  result.frame_count = gt_sets.size();
  if (result.pair_count > 0) {
    result.mae = total_error / static_cast<double>(result.pair_count);
    result.acc = 100.0 * static_cast<double>(correct) / static_cast<double>(result.pair_count);
  }
  return result;
}

void write_results_jsonl(const std::filesystem::path& path, std::span<const std::size_t> frame_indices,
                         const EvalResult& result) {
  require(frame_indices.size() == result.frames.size(), ErrorCode::ShapeMismatch, "frame index count");
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (std::size_t i = 0; i < result.frames.size(); ++i) {
    const auto& f = result.frames[i];
    nlohmann::json j;
    j["frame_index"] = frame_indices[i];
    j["gt"] = f.gt;
    j["pred"] = f.pred;
    j["matched_errors"] = f.errors;
    out << j.dump() << "\n";
  }
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

}  // namespace avdoa
