#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "pushdet/error.hpp"
#include "pushdet/evaluation.hpp"
#include "pushdet/forest.hpp"
#include "pushdet/kinematics.hpp"
#include "pushdet/stream.hpp"
#include "pushdet/synth.hpp"
#include "pushdet/tracker.hpp"
#include "pushdet/version.hpp"

namespace py = pybind11;
using namespace pushdet;

namespace {

using Pt = std::pair<double, double>;
using Box = std::array<double, 4>;

Point2 point(const Pt& p) { return {p.first, p.second}; }
BBox bbox(const Box& b) { return {b[0], b[1], b[2], b[3]}; }

std::vector<Label> labels_of(const std::vector<int>& ys) {
  std::vector<Label> out;
  out.reserve(ys.size());
  for (int y : ys) {
    if (y != 0 && y != 1) throw Error(Errc::Validation, "labels must be 0 (normal) or 1 (push)");
    out.push_back(static_cast<Label>(y));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_pushdet, m) {
  m.doc() = "Skeleton-based push detection: tracking, joint-angle features and a random forest.";
  m.attr("__version__") = kVersion;

  static py::exception<Error> error_type(m, "PushdetError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object cls = error_type;
      py::object exc = cls(e.what());
      exc.attr("code") = to_string(e.code());
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  py::enum_<Label>(m, "Label").value("NORMAL", Label::Normal).value("PUSH", Label::Push);

  py::class_<Keypoint>(m, "Keypoint")
      .def(py::init<double, double, double>(), py::arg("x"), py::arg("y"), py::arg("conf"))
      .def_readwrite("x", &Keypoint::x)
      .def_readwrite("y", &Keypoint::y)
      .def_readwrite("conf", &Keypoint::conf)
      .def("__repr__", [](const Keypoint& k) {
        return "Keypoint(" + std::to_string(k.x) + ", " + std::to_string(k.y) + ", " + std::to_string(k.conf) + ")";
      });

  py::class_<Skeleton>(m, "Skeleton")
      .def(py::init<>())
      .def_readwrite("keypoints", &Skeleton::keypoints)
      .def_property(
          "bbox", [](const Skeleton& s) { return Box{s.bbox.x, s.bbox.y, s.bbox.w, s.bbox.h}; },
          [](Skeleton& s, const Box& b) { s.bbox = bbox(b); })
      .def_readwrite("det_conf", &Skeleton::det_conf)
      .def_readwrite("tid", &Skeleton::tid);

  py::class_<FrameDetections>(m, "Frame")
      .def(py::init<>())
      .def_readwrite("frame_idx", &FrameDetections::frame_idx)
      .def_readwrite("ts_ms", &FrameDetections::ts_ms)
      .def_readwrite("persons", &FrameDetections::persons);

  py::class_<ClipRecord>(m, "Clip")
      .def(py::init<>())
      .def_readwrite("clip_id", &ClipRecord::clip_id)
      .def_readwrite("label", &ClipRecord::label)
      .def_property(
          "resolution", [](const ClipRecord& c) { return std::pair{c.resolution.width, c.resolution.height}; },
          [](ClipRecord& c, std::pair<int, int> r) { c.resolution = {r.first, r.second}; })
      .def_readwrite("frames", &ClipRecord::frames)
      .def("__eq__", [](const ClipRecord& a, const ClipRecord& b) { return a == b; });

  m.def("parse_clip", [](const std::string& text) { return parse_clip(text); }, py::arg("text"),
        "Parse JSONL clip text.");
  m.def("serialize_clip", &serialize_clip, py::arg("clip"));
  m.def("load_clip_dir", &load_clip_dir, py::arg("path"));

  m.def("joint_angle", [](Pt a, Pt b, Pt c) { return joint_angle(point(a), point(b), point(c)); }, py::arg("a"),
        py::arg("b"), py::arg("c"), "Angle ABC in degrees.");
  m.def("iou", [](const Box& a, const Box& b) { return iou(bbox(a), bbox(b)); }, py::arg("a"), py::arg("b"));
  m.def("gini", &gini, py::arg("n_normal"), py::arg("n_push"));

  m.def(
      "compute_features",
      [](const Skeleton& s, double kp_conf_min) {
        const FeatureVector fv = compute_features(s, kp_conf_min);
        return std::pair{std::vector<double>(fv.values.begin(), fv.values.end()), fv.mask_string()};
      },
      py::arg("skeleton"), py::arg("kp_conf_min") = 0.5, "Nine joint-angle features and their v/i/x mask.");
  m.attr("FEATURE_NAMES") = std::vector<std::string>(kFeatureNames.begin(), kFeatureNames.end());

  m.def(
      "track_clip",
      [](const ClipRecord& clip, double iou_min, std::int64_t max_age) {
        return to_clip_record(track_clip(clip, {iou_min, max_age, 64}));
      },
      py::arg("clip"), py::arg("iou_min") = 0.3, py::arg("max_age") = 30, "Copy of the clip with track ids filled in.");

  m.def(
      "pair_samples",
      [](const std::vector<ClipRecord>& clips, int features, double kappa) {
        PipelineConfig cfg;
        cfg.kinematics.feature_set = feature_set_from_count(features);
        cfg.gate.kappa = kappa;
        py::list out;
        for (const PairSample& s : collect_pair_samples(clips, cfg))
          out.append(py::dict(py::arg("clip_id") = s.clip_id, py::arg("frame") = s.frame_idx,
                              py::arg("tid_a") = s.tid_a, py::arg("tid_b") = s.tid_b,
                              py::arg("features") = s.features, py::arg("label") = s.label));
        return out;
      },
      py::arg("clips"), py::arg("features") = 9, py::arg("kappa") = 1.5);

  py::class_<ForestModel>(m, "ForestModel")
      .def_readonly("feature_dim", &ForestModel::feature_dim)
      .def_readonly("feature_names", &ForestModel::feature_names)
      .def_property_readonly("n_trees", [](const ForestModel& f) { return f.trees.size(); })
      .def("predict", [](const ForestModel& f, const std::vector<double>& x) { return f.predict(x); })
      .def("predict_proba", [](const ForestModel& f, const std::vector<double>& x) { return f.predict_proba(x); })
      .def("to_json", &save_model)
      .def_static("from_json", [](const std::string& text) { return load_model(text); });

  m.def(
      "fit",
      [](const std::vector<std::vector<double>>& X, const std::vector<int>& y, std::size_t n_trees,
         std::uint64_t seed, std::optional<std::size_t> max_features, std::optional<std::size_t> max_depth,
         bool bootstrap, unsigned threads) {
        if (X.size() != y.size()) throw Error(Errc::Validation, "X and y differ in length");
        if (X.empty()) throw Error(Errc::Training, "no samples");
        TrainingSet ts(X.front().size());
        const auto labels = labels_of(y);
        for (std::size_t i = 0; i < X.size(); ++i) ts.add(X[i], labels[i]);
        ForestParams p;
        p.n_trees = n_trees;
        p.seed = seed;
        p.max_features = max_features;
        p.max_depth = max_depth;
        p.bootstrap = bootstrap;
        py::gil_scoped_release release;
        return fit(ts, p, {}, {threads});
      },
      py::arg("X"), py::arg("y"), py::arg("n_trees") = 100, py::arg("seed") = 42, py::arg("max_features") = py::none(),
      py::arg("max_depth") = py::none(), py::arg("bootstrap") = true, py::arg("threads") = 1,
      "Train a random forest; y uses 0 = normal, 1 = push.");

  m.def(
      "gen_clip",
      [](bool push, std::uint64_t seed, std::int64_t n_frames, const std::string& preset) {
        if (preset != "far" && preset != "close") throw Error(Errc::Config, "preset must be 'close' or 'far'");
        ScenarioParams p = preset == "far" ? ScenarioParams::far_surveillance() : ScenarioParams::close_range();
        p.scenario = push ? Scenario::Push : Scenario::Normal;
        p.seed = seed;
        p.n_frames = n_frames;
        const SynthClip sc = gen_clip(p);
        return std::pair{sc.clip, sc.truth.contact};
      },
      py::arg("push"), py::arg("seed"), py::arg("n_frames") = 60, py::arg("preset") = "close",
      "Synthetic two-actor clip and its contact interval [first, last) (None for normal clips).");

  m.def(
      "confusion",
      [](const std::vector<int>& truth, const std::vector<int>& pred) {
        return confusion(labels_of(truth), labels_of(pred)).counts;
      },
      py::arg("truth"), py::arg("pred"), "2x2 counts indexed [true][pred].");
  m.def(
      "normalize_rows",
      [](const std::array<std::array<std::uint64_t, 2>, 2>& counts) {
        ConfusionMatrix cm;
        cm.counts = counts;
        return normalize_rows(cm);
      },
      py::arg("counts"));
  m.def(
      "precision_recall",
      [](const std::array<std::array<std::uint64_t, 2>, 2>& counts) {
        ConfusionMatrix cm;
        cm.counts = counts;
        const PrecisionRecall pr = precision_recall(cm);
        return std::pair{pr.precision, pr.recall};
      },
      py::arg("counts"));

  m.def(
      "run_stream",
      [](const std::string& text, const ForestModel& model, bool per_frame, std::size_t window, unsigned threads) {
        RunConfig cfg;
        cfg.alert_mode = per_frame ? AlertMode::PerFrame : AlertMode::PerWindow;
        cfg.window_frames = window;
        cfg.threads = threads;
        cfg.pipeline.kinematics.feature_set = feature_set_from_count(static_cast<int>(model.feature_dim / 2));
        std::istringstream in(text);
        std::ostringstream out, log;
        {
          py::gil_scoped_release release;
          run_stream(in, out, log, model, cfg);
        }
        return std::pair{out.str(), log.str()};
      },
      py::arg("text"), py::arg("model"), py::arg("per_frame") = false, py::arg("window") = 30,
      py::arg("threads") = 1, "Run the live pipeline over JSONL text; returns (events, log).");
}
