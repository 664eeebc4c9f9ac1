#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <vector>

#include "avdoa/audio.hpp"
#include "avdoa/commands.hpp"
#include "avdoa/error.hpp"
#include "avdoa/eval.hpp"
#include "avdoa/gcc_phat.hpp"
#include "avdoa/geom.hpp"
#include "avdoa/nn/checkpoint.hpp"
#include "avdoa/nn/model.hpp"
#include "avdoa/visual.hpp"

namespace py = pybind11;
using namespace avdoa;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
  require(a.ndim() == 1, ErrorCode::ShapeMismatch, "expected a 1-D array");
  return {a.data(), a.data() + a.size()};
}

Array to_array(const std::vector<double>& v, std::vector<py::ssize_t> shape) {
  Array out(shape);
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Array to_array(const std::vector<double>& v) { return to_array(v, {static_cast<py::ssize_t>(v.size())}); }

MultichannelSignal to_signal(const Array& a, double sample_rate) {
  require(a.ndim() == 2, ErrorCode::ShapeMismatch, "expected a channels x samples array");
  MultichannelSignal s;
  s.sample_rate = sample_rate;
  const auto r = a.unchecked<2>();
  for (py::ssize_t c = 0; c < r.shape(0); ++c) {
    std::vector<double> ch(static_cast<std::size_t>(r.shape(1)));
    for (py::ssize_t t = 0; t < r.shape(1); ++t) ch[static_cast<std::size_t>(t)] = r(c, t);
    s.channels.push_back(std::move(ch));
  }
  return s;
}

Array from_signal(const MultichannelSignal& s) {
  Array out({static_cast<py::ssize_t>(s.num_channels()), static_cast<py::ssize_t>(s.length())});
  auto w = out.mutable_unchecked<2>();
  for (std::size_t c = 0; c < s.num_channels(); ++c)
    for (std::size_t t = 0; t < s.length(); ++t) w(static_cast<py::ssize_t>(c), static_cast<py::ssize_t>(t)) = s.channels[c][t];
  return out;
}

nn::Tensor to_tensor(const Array& a) {
  if (a.ndim() == 1) return nn::Tensor(1, static_cast<std::size_t>(a.shape(0)), {a.data(), a.data() + a.size()});
  require(a.ndim() == 2, ErrorCode::ShapeMismatch, "expected a 2-D array");
  return nn::Tensor(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                    {a.data(), a.data() + a.size()});
}

Array from_tensor(const nn::Tensor& t) {
  return to_array(std::vector<double>(t.data().begin(), t.data().end()),
                  {static_cast<py::ssize_t>(t.rows()), static_cast<py::ssize_t>(t.cols())});
}

GccFeature to_feature(const Array& a, double sample_rate, int lag_min) {
  require(a.ndim() == 2, ErrorCode::ShapeMismatch, "expected a pairs x lags array");
  GccFeature f;
  f.pairs = static_cast<std::size_t>(a.shape(0));
  f.lags = {lag_min, lag_min + static_cast<int>(a.shape(1)) - 1};
  f.sample_rate = sample_rate;
  f.values.assign(a.data(), a.data() + a.size());
  return f;
}

py::dict result_dict(const EvalResult& r) {
  py::dict d;
  d["mae"] = r.mae;
  d["acc"] = r.acc;
  d["frames"] = r.frame_count;
  d["pairs"] = r.pair_count;
  return d;
}

py::dict summary_dict(const EvalSummary& s) {
  py::dict d = result_dict(s.overall);
  d["single"] = s.single ? py::object(result_dict(*s.single)) : py::none();
  d["dual"] = s.dual ? py::object(result_dict(*s.dual)) : py::none();
  return d;
}

Split split_arg(const std::string& s) { return parse_split(s); }

}  // namespace

PYBIND11_MODULE(_avdoa, m) {
  m.doc() = "Multi-speaker direction-of-arrival estimation from audio and face detections.";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  // Geometry.
  py::class_<Intrinsics>(m, "Intrinsics")
      .def(py::init<>())
      .def_readwrite("fu", &Intrinsics::fu)
      .def_readwrite("fv", &Intrinsics::fv)
      .def_readwrite("cu", &Intrinsics::cu)
      .def_readwrite("cv", &Intrinsics::cv)
      .def_readwrite("width", &Intrinsics::width)
      .def_readwrite("height", &Intrinsics::height);

  py::class_<CameraCalibration>(m, "Camera")
      .def(py::init([](std::array<double, 3> position, double yaw_deg, const Intrinsics& intr) {
             return CameraCalibration::looking_along({position[0], position[1], position[2]}, yaw_deg, intr);
           }),
           py::arg("position") = std::array<double, 3>{0, 0, 0}, py::arg("yaw_deg") = 0.0,
           py::arg("intrinsics") = Intrinsics{})
      .def_readwrite("intrinsics", &CameraCalibration::intrinsics)
      .def("project", [](const CameraCalibration& cal, std::array<double, 3> p) {
        const Pixel px = project_point(world_to_camera({p[0], p[1], p[2]}, cal), cal);
        return std::make_pair(px.u, px.v);
      })
      .def("in_view", [](const CameraCalibration& cal, std::array<double, 3> p) {
        return in_field_of_view({p[0], p[1], p[2]}, cal);
      });

  py::class_<MicArray>(m, "MicArray")
      .def_static("square", &MicArray::square, py::arg("side_m") = 0.1)
      .def_static("load", &MicArray::load)
      .def_property_readonly("positions",
                             [](const MicArray& a) {
                               std::vector<std::array<double, 3>> out;
                               for (const Vec3& v : a.mics) out.push_back({v.x, v.y, v.z});
                               return out;
                             })
      .def_readwrite("speed_of_sound", &MicArray::speed_of_sound)
      .def("__len__", &MicArray::size);

  m.def("wrap_degrees", &wrap_degrees);
  m.def(
      "synthesize_bbox",
      [](std::array<double, 3> p, const CameraCalibration& cal, std::array<double, 3> noise_var, std::uint64_t seed)
          -> std::optional<std::array<double, 4>> {
        const auto b = synthesize_bbox({p[0], p[1], p[2]}, cal, FaceSize{}, NoiseCov3{noise_var[0], noise_var[1], noise_var[2]},
                                       seed);
        if (!b) return std::nullopt;
        return std::array<double, 4>{b->u, b->v, b->w, b->h};
      },
      py::arg("point"), py::arg("camera"), py::arg("noise_var") = std::array<double, 3>{0.2, 0.2, 0.2},
      py::arg("seed") = 0, "Face box (u, v, w, h) for a head at `point`, or None when out of view.");

  // Audio.
  m.def(
      "synth_source",
      [](const std::string& kind, double duration_s, double sample_rate, std::uint64_t seed) {
        return to_array(synth_source(parse_source_kind(kind), duration_s, sample_rate, seed).samples);
      },
      py::arg("kind") = "speech_like_ar", py::arg("duration_s") = kDefaultFrameSeconds, py::arg("sample_rate") = 48000.0,
      py::arg("seed") = 0);
  m.def(
      "render_far_field",
      [](const std::vector<Array>& signals, const std::vector<double>& azimuths, const MicArray& array,
         double sample_rate) {
        require(signals.size() == azimuths.size(), ErrorCode::ShapeMismatch, "one azimuth per signal");
        std::vector<PlacedSource> sources;
        for (std::size_t i = 0; i < signals.size(); ++i) sources.push_back({{to_vector(signals[i]), sample_rate}, azimuths[i]});
        return from_signal(render_array(sources, array));
      },
      py::arg("signals"), py::arg("azimuths"), py::arg("array") = MicArray::square(0.1),
      py::arg("sample_rate") = 48000.0, "Channels x samples mixture of far-field sources.");
  m.def(
      "add_noise",
      [](const Array& x, double snr_db, std::uint64_t seed) { return from_signal(add_noise_at_snr(to_signal(x, 48000.0), snr_db, seed)); },
      py::arg("signal"), py::arg("snr_db"), py::arg("seed") = 0);

  // GCC-PHAT and SRP-PHAT.
  m.def(
      "gcc_phat_pair",
      [](const Array& l, const Array& p, int lag_min, int lag_max, std::size_t fft_len) {
        return to_array(gcc_phat_pair(to_vector(l), to_vector(p), {lag_min, lag_max}, fft_len));
      },
      py::arg("l"), py::arg("p"), py::arg("lag_min") = -25, py::arg("lag_max") = 25,
      py::arg("fft_len") = kDefaultFftLength, "Lags lag_min..lag_max; a delay d of `p` relative to `l` peaks at -d.");
  m.def(
      "gcc_feature",
      [](const Array& frame, double sample_rate, int lag_min, int lag_max, std::size_t fft_len) {
        const GccFeature f = gcc_feature(to_signal(frame, sample_rate), {lag_min, lag_max}, fft_len);
        return to_array(f.values, {static_cast<py::ssize_t>(f.pairs), static_cast<py::ssize_t>(f.lags.count())});
      },
      py::arg("frame"), py::arg("sample_rate") = 48000.0, py::arg("lag_min") = -25, py::arg("lag_max") = 25,
      py::arg("fft_len") = kDefaultFftLength, "Pairs x lags matrix over all microphone pairs (l < p).");
  m.def(
      "srp_phat",
      [](const Array& gcc, const MicArray& array, double sample_rate, int lag_min) {
        const SrpMap map = srp_phat(to_feature(gcc, sample_rate, lag_min), array);
        return to_array(std::vector<double>(map.scores.begin(), map.scores.end()));
      },
      py::arg("gcc"), py::arg("array") = MicArray::square(0.1), py::arg("sample_rate") = 48000.0,
      py::arg("lag_min") = -25, "360 scores, index i for azimuth i - 180.");

  // Visual encoding.
  m.def(
      "encode_visual",
      [](const std::vector<std::array<double, 4>>& boxes, double image_w, double image_h, std::size_t length,
         std::optional<double> empty_value) {
        DetectionFrame frame;
        for (const auto& b : boxes) frame.boxes.push_back({b[0], b[1], b[2], b[3]});
        const VisualFeature f = encode_visual(frame, image_w, image_h, length, empty_value);
        return to_array(f.values, {2, static_cast<py::ssize_t>(f.length)});
      },
      py::arg("boxes"), py::arg("image_w") = 640.0, py::arg("image_h") = 480.0, py::arg("length") = kVisualLength,
      py::arg("empty_value") = py::none(), "Boxes are (u, v, w, h); returns the 2 x length u/v encoding.");

  // Decoding and metrics.
  m.def(
      "decode_doa",
      [](const Array& posterior, std::size_t n_sources, double min_separation_deg) {
        return decode_doa(to_vector(posterior), n_sources, min_separation_deg);
      },
      py::arg("posterior"), py::arg("n_sources"), py::arg("min_separation_deg") = 10.0);
  m.def(
      "decode_srp",
      [](const Array& scores, std::size_t n_sources, double min_separation_deg) {
        const auto v = to_vector(scores);
        require(v.size() == 360, ErrorCode::ShapeMismatch, "expected 360 scores");
        SrpMap map;
        std::copy(v.begin(), v.end(), map.scores.begin());
        return decode_srp(map, n_sources, min_separation_deg);
      },
      py::arg("scores"), py::arg("n_sources"), py::arg("min_separation_deg") = 10.0);
  m.def("angular_error", &angular_error, py::arg("a_deg"), py::arg("b_deg"));
  m.def(
      "mae_acc",
      [](const std::vector<std::vector<double>>& pred, const std::vector<std::vector<double>>& gt, double allowance) {
        return result_dict(mae_acc(pred, gt, allowance));
      },
      py::arg("pred"), py::arg("gt"), py::arg("allowance_deg") = 5.0);

  // Networks.
  py::class_<nn::Network>(m, "Network")
      .def_property_readonly("kind", [](const nn::Network& n) { return std::string(nn::to_string(n.config().kind)); })
      .def_property_readonly("hidden", [](const nn::Network& n) { return n.config().hidden; })
      .def(
          "predict",
          [](const nn::Network& n, const Array& gcc, std::optional<Array> vis) {
            const nn::Tensor g = to_tensor(gcc);
            const nn::Tensor v = vis ? to_tensor(*vis) : nn::Tensor();
            nn::ModelOutput out;
            {
              py::gil_scoped_release release;
              out = n.predict(g, v);
            }
            return py::make_tuple(from_tensor(out.posterior),
                                  out.weights.size() ? py::object(from_tensor(out.weights)) : py::none());
          },
          py::arg("gcc"), py::arg("vis") = py::none(),
          "Eval-mode posterior (batch x 360) and, for AVAW, the (audio, u, v) weights.")
      .def("save", [](const nn::Network& n, const std::filesystem::path& p) { nn::save_checkpoint(n, p); });
  m.def("load_checkpoint", &nn::load_checkpoint, py::arg("path"));

  // Pipeline commands, mirroring the CLI subcommands.
  m.def(
      "simulate",
      [](const std::filesystem::path& out, std::size_t frames, double p_two, double visibility, std::uint64_t seed,
         const std::string& source) {
        ScenarioConfig sc;
        sc.frames = frames;
        sc.p_two_sources = p_two;
        sc.visibility_fraction = visibility;
        sc.seed = seed;
        sc.source_kind = parse_source_kind(source);
        py::gil_scoped_release release;
        const SimulateReport r = cmd_simulate(sc, out);
        return std::make_pair(r.frames, r.detection_rate);
      },
      py::arg("out"), py::arg("frames") = 1000, py::arg("p_two") = 0.0, py::arg("visibility") = 0.1,
      py::arg("seed") = 0, py::arg("source") = "speech_like_ar", "Returns (frames, detection rate in percent).");
  m.def(
      "extract_features",
      [](const std::filesystem::path& dataset, const std::filesystem::path& out, std::optional<double> snr_db,
         double fdsp_percent, std::uint64_t seed, std::size_t threads) {
        cmd_features(dataset, out, {snr_db, fdsp_percent, seed, threads});
      },
      py::arg("dataset"), py::arg("out"), py::arg("snr_db") = py::none(), py::arg("fdsp_percent") = 0.0,
      py::arg("seed") = 0, py::arg("threads") = 1, py::call_guard<py::gil_scoped_release>());
  m.def(
      "train",
      [](const std::filesystem::path& features, const std::filesystem::path& out, const std::string& model,
         std::size_t epochs, std::size_t batch, double lr, std::vector<std::size_t> widths, std::uint64_t seed,
         const std::string& split) {
        TrainOptions to;
        to.model = nn::parse_model_kind(model);
        to.config.epochs = epochs;
        to.config.batch_size = batch;
        to.config.adam.learning_rate = lr;
        to.config.hidden = std::move(widths);
        to.config.seed = seed;
        to.split = split_arg(split);
        return cmd_train(features, out, to).epoch_loss;
      },
      py::arg("features"), py::arg("out"), py::arg("model") = "avc", py::arg("epochs") = 10, py::arg("batch") = 256,
      py::arg("lr") = 1e-3, py::arg("widths") = std::vector<std::size_t>{1000, 1000, 1000}, py::arg("seed") = 0,
      py::arg("split") = "train", py::call_guard<py::gil_scoped_release>(), "Returns the mean loss of each epoch.");
  m.def(
      "evaluate",
      [](const std::filesystem::path& ckpt, const std::filesystem::path& features, const std::filesystem::path& out,
         const std::string& split) {
        EvalSummary s;
        {
          py::gil_scoped_release release;
          s = cmd_eval(ckpt, features, out, split_arg(split));
        }
        return summary_dict(s);
      },
      py::arg("checkpoint"), py::arg("features"), py::arg("out"), py::arg("split") = "test");
  m.def(
      "robustness",
      [](const std::filesystem::path& ckpt, const std::filesystem::path& dataset, const std::filesystem::path& out,
         std::vector<std::optional<double>> snr_levels, std::vector<double> fdsp_percent, std::uint64_t seed,
         const std::string& split, std::size_t threads) {
        RobustnessOptions ro;
        ro.snr_levels = std::move(snr_levels);
        ro.fdsp_percent = std::move(fdsp_percent);
        ro.seed = seed;
        ro.split = split_arg(split);
        ro.threads = threads;
        RobustnessGrid g;
        {
          py::gil_scoped_release release;
          g = cmd_robustness(ckpt, dataset, out, ro);
        }
        std::vector<std::vector<std::pair<double, double>>> cells;
        for (const auto& row : g.cells) {
          cells.emplace_back();
          for (const GridCell& c : row) cells.back().emplace_back(c.mae, c.acc);
        }
        return cells;
      },
      py::arg("checkpoint"), py::arg("dataset"), py::arg("out"), py::arg("snr_levels") = default_snr_levels(),
      py::arg("fdsp_percent") = std::vector<double>{0, 10, 30, 50, 70}, py::arg("seed") = 0,
      py::arg("split") = "test", py::arg("threads") = 1,
      "(MAE, ACC) per cell, rows = SNR levels (None = clean), columns = FDSP percent.");
  m.def(
      "baseline",
      [](const std::filesystem::path& dataset, const std::filesystem::path& out, std::optional<double> snr_db,
         std::uint64_t seed, const std::string& split, std::size_t threads) {
        EvalSummary s;
        {
          py::gil_scoped_release release;
          s = cmd_baseline(dataset, out, {snr_db, seed, split_arg(split), threads});
        }
        return summary_dict(s);
      },
      py::arg("dataset"), py::arg("out"), py::arg("snr_db") = py::none(), py::arg("seed") = 0, py::arg("split") = "all",
      py::arg("threads") = 1);
}
