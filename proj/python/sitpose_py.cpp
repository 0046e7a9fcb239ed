#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <array>
#include <string>
#include <vector>

#include "sitpose/ensemble.hpp"
#include "sitpose/error.hpp"
#include "sitpose/eval.hpp"
#include "sitpose/features.hpp"
#include "sitpose/learners.hpp"
#include "sitpose/monitor.hpp"
#include "sitpose/skeleton.hpp"
#include "sitpose/synth.hpp"
#include "sitpose/tof.hpp"

namespace py = pybind11;
using namespace sitpose;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<int, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const DoubleArray& a) {
  if (a.ndim() != 2) throw InvalidArgument("expected a 2-D feature array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  Matrix m(rows, cols);
  const double* p = a.data();
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = p[i * cols + j];
  return m;
}

std::vector<int> to_labels(const IntArray& a) {
  if (a.ndim() != 1) throw InvalidArgument("expected a 1-D label array");
  return {a.data(), a.data() + a.size()};
}

DoubleArray from_matrix(const Matrix& m) {
  DoubleArray out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

IntArray from_labels(const std::vector<int>& y) {
  IntArray out(static_cast<py::ssize_t>(y.size()));
  std::copy(y.begin(), y.end(), out.mutable_data());
  return out;
}

py::tuple as_xy(const FeatureTable& t) { return py::make_tuple(from_matrix(t.x), from_labels(t.y)); }

LearnerKind kind_from_name(const std::string& name) {
  const auto k = parse_learner_kind(name);
  if (!k) throw InvalidArgument("unknown learner '" + name + "' (expected dt, svm, mlp or gbdt)");
  return *k;
}

std::vector<LearnerSpec> specs_from_names(const std::vector<std::string>& names, std::uint64_t seed) {
  std::vector<LearnerSpec> specs;
  for (const auto& n : names) specs.push_back(LearnerSpec::defaults(kind_from_name(n), seed));
  return specs;
}

VotingMode mode_from_name(const std::string& name) {
  if (name == "soft") return VotingMode::Soft;
  if (name == "hard") return VotingMode::Hard;
  throw InvalidArgument("voting mode must be 'soft' or 'hard'");
}

PostureLabel label_from_name(const std::string& name) {
  const auto l = parse_label(name);
  if (!l) throw InvalidArgument("unknown posture label '" + name + "'");
  return *l;
}

template <class Predictor>
DoubleArray proba_rows(const Predictor& predict, const Matrix& x, std::size_t k) {
  DoubleArray out({x.rows(), k});
  double* p = out.mutable_data();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = predict(x.row(i));
    std::copy(row.begin(), row.end(), p + i * k);
  }
  return out;
}

py::dict report_dict(const MetricReport& r) {
  py::dict d;
  d["precision"] = r.precision;
  d["recall"] = r.recall;
  d["f1"] = r.f1;
  d["support"] = r.support;
  d["weighted_f1"] = r.weighted_f1;
  d["weighted_precision"] = r.weighted_precision;
  d["weighted_recall"] = r.weighted_recall;
  d["accuracy"] = r.accuracy;
  return d;
}

py::bytes to_bytes(const std::vector<std::uint8_t>& v) {
  return {reinterpret_cast<const char*>(v.data()), v.size()};
}

std::vector<std::uint8_t> from_bytes(const py::bytes& b) {
  const std::string s = b;
  return {s.begin(), s.end()};
}

// Per-second monitor driven from Python.
class Monitor {
 public:
  explicit Monitor(const MonitorConfig& config) : config_(config) { config_.validate(); }

  std::vector<std::string> tick(const std::string& label) {
    std::vector<std::string> lines;
    for (const auto& a : sitpose::tick(state_, label_from_name(label), config_)) lines.push_back(a.line());
    return lines;
  }

  std::string report() const { return render_report(make_report(state_)); }
  std::uint64_t seconds() const { return state_.tick_count; }

 private:
  MonitorConfig config_;
  SessionState state_;
};

}  // namespace

PYBIND11_MODULE(_sitpose, m) {
  m.doc() = "Sitting posture classification and sedentary monitoring";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<DegenerateError>(m, "DegenerateError", base.ptr());
  py::register_exception<ModelFormatError>(m, "ModelFormatError", base.ptr());
  py::register_exception<TrainingError>(m, "TrainingError", base.ptr());

  std::vector<std::string> postures;
  for (auto p : kAllPostures) postures.emplace_back(label_name(p));
  m.attr("POSTURES") = postures;

  m.def(
      "sample_received",
      [](double amplitude, double offset, double phase, double frequency_hz) {
        tof::TofConfig c;
        c.modulation_frequency_hz = frequency_hz;
        const auto s = tof::sample_received(amplitude, offset, phase, c);
        return std::array<double, 4>{s.r0, s.r1, s.r2, s.r3};
      },
      py::arg("amplitude"), py::arg("offset"), py::arg("phase"), py::arg("frequency_hz") = 10e6);
  m.def(
      "phase_from_samples",
      [](const std::array<double, 4>& r) { return tof::phase_from_samples({r[0], r[1], r[2], r[3]}); },
      py::arg("samples"));
  m.def(
      "depth_from_phase",
      [](double phase, double frequency_hz) {
        tof::TofConfig c;
        c.modulation_frequency_hz = frequency_hz;
        return tof::depth_from_phase(phase, c);
      },
      py::arg("phase"), py::arg("frequency_hz") = 10e6);

  m.def(
      "angle_between",
      [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
        return angle_between({a[0], a[1], a[2]}, {b[0], b[1], b[2]});
      },
      py::arg("v1"), py::arg("v2"), "Angle in degrees between two 3-vectors.");

  m.def(
      "generate_csv",
      [](const std::filesystem::path& path, std::size_t per_class, std::uint64_t seed) {
        write_dataset(generate(SynthConfig::uniform(per_class, seed)), path);
      },
      py::arg("path"), py::arg("per_class"), py::arg("seed") = 42,
      "Writes a synthetic labelled skeleton dataset as CSV.");
  m.def(
      "synth_features",
      [](std::size_t per_class, std::uint64_t seed, bool include_head_xyz) {
        FeatureConfig fc;
        fc.include_head_xyz = include_head_xyz;
        return as_xy(extract_dataset_features(generate(SynthConfig::uniform(per_class, seed)), fc));
      },
      py::arg("per_class"), py::arg("seed") = 42, py::arg("include_head_xyz") = false,
      "Feature matrix and label codes of a synthetic dataset.");
  m.def(
      "load_features",
      [](const std::filesystem::path& path, bool include_head_xyz) {
        FeatureConfig fc;
        fc.include_head_xyz = include_head_xyz;
        return as_xy(extract_dataset_features(load_dataset(path), fc));
      },
      py::arg("path"), py::arg("include_head_xyz") = false);

  py::class_<TrainedModel>(m, "Model")
      .def_static(
          "train",
          [](const std::string& kind, const DoubleArray& x, const IntArray& y, std::uint64_t seed,
             std::size_t num_classes) {
            const auto labels = to_labels(y);
            const Matrix mx = to_matrix(x);
            py::gil_scoped_release release;
            return train_model(LearnerSpec::defaults(kind_from_name(kind), seed), mx, labels, num_classes);
          },
          py::arg("kind"), py::arg("x"), py::arg("y"), py::arg("seed") = 42,
          py::arg("num_classes") = kNumPostures)
      .def_static("load", &load_model, py::arg("path"))
      .def_static("from_bytes", [](const py::bytes& b) { return deserialize_model(from_bytes(b)); })
      .def("save", [](const TrainedModel& self, const std::filesystem::path& p) { save_model(self, p); })
      .def("to_bytes", [](const TrainedModel& self) { return to_bytes(serialize_model(self)); })
      .def_property_readonly("kind", [](const TrainedModel& self) { return std::string(learner_short_name(self.kind())); })
      .def_property_readonly("feature_dim", &TrainedModel::feature_dim)
      .def_property_readonly("num_classes", &TrainedModel::num_classes)
      .def("predict_proba",
           [](const TrainedModel& self, const DoubleArray& x) {
             return proba_rows([&](std::span<const double> r) { return self.predict_proba(r); }, to_matrix(x),
                               self.num_classes());
           })
      .def("predict", [](const TrainedModel& self, const DoubleArray& x) {
        const Matrix mx = to_matrix(x);
        std::vector<int> out;
        for (std::size_t i = 0; i < mx.rows(); ++i) out.push_back(self.predict(mx.row(i)));
        return from_labels(out);
      });

  py::class_<TrainedEnsemble>(m, "Ensemble")
      .def_static(
          "train",
          [](const std::vector<std::string>& kinds, const DoubleArray& x, const IntArray& y,
             std::vector<double> weights, const std::string& mode, std::uint64_t seed, std::size_t num_classes) {
            const auto specs = specs_from_names(kinds, seed);
            const auto labels = to_labels(y);
            const Matrix mx = to_matrix(x);
            const VotingMode vm = mode_from_name(mode);
            py::gil_scoped_release release;
            return train_ensemble(specs, mx, labels, num_classes, std::move(weights), vm);
          },
          py::arg("kinds"), py::arg("x"), py::arg("y"), py::arg("weights") = std::vector<double>{},
          py::arg("mode") = "soft", py::arg("seed") = 42, py::arg("num_classes") = kNumPostures)
      .def_static("load", &load_ensemble, py::arg("path"))
      .def_static("from_bytes", [](const py::bytes& b) { return deserialize_ensemble(from_bytes(b)); })
      .def("save", [](const TrainedEnsemble& self, const std::filesystem::path& p) { save_ensemble(self, p); })
      .def("to_bytes", [](const TrainedEnsemble& self) { return to_bytes(serialize_ensemble(self)); })
      .def_property_readonly("weights", &TrainedEnsemble::weights)
      .def_property_readonly("members", [](const TrainedEnsemble& self) {
        std::vector<std::string> names;
        for (const auto& mem : self.members()) names.emplace_back(learner_short_name(mem.kind()));
        return names;
      })
      .def("predict_proba",
           [](const TrainedEnsemble& self, const DoubleArray& x) {
             return proba_rows([&](std::span<const double> r) { return self.vote_soft(r).probabilities; },
                               to_matrix(x), self.num_classes());
           })
      .def("predict", [](const TrainedEnsemble& self, const DoubleArray& x) {
        const Matrix mx = to_matrix(x);
        std::vector<int> out;
        for (std::size_t i = 0; i < mx.rows(); ++i) out.push_back(self.predict(mx.row(i)));
        return from_labels(out);
      });

  m.def(
      "soft_vote",
      [](const std::vector<std::vector<double>>& probs, const std::vector<double>& weights) {
        const auto v = soft_vote(probs, weights);
        return py::make_tuple(v.label, v.probabilities);
      },
      py::arg("member_probs"), py::arg("weights"), "Weighted mean of probability vectors and its argmax.");

  m.def(
      "metrics",
      [](const IntArray& truth, const IntArray& predicted, std::size_t num_classes) {
        const auto cm = confusion(to_labels(truth), to_labels(predicted), num_classes);
        auto d = report_dict(metrics(cm));
        std::vector<std::vector<std::uint64_t>> rows(num_classes, std::vector<std::uint64_t>(num_classes));
        for (std::size_t t = 0; t < num_classes; ++t)
          for (std::size_t p = 0; p < num_classes; ++p) rows[t][p] = cm(t, p);
        d["confusion"] = rows;
        return d;
      },
      py::arg("truth"), py::arg("predicted"), py::arg("num_classes") = kNumPostures);
  m.def(
      "stratified_folds",
      [](const IntArray& y, std::size_t k, std::uint64_t seed, std::size_t num_classes) {
        return from_labels(stratified_folds(to_labels(y), num_classes, k, seed));
      },
      py::arg("y"), py::arg("k") = 5, py::arg("seed") = 42, py::arg("num_classes") = kNumPostures);
  m.def(
      "cross_validate",
      [](const std::filesystem::path& csv, const std::vector<std::string>& kinds, std::size_t folds,
         std::uint64_t seed, std::vector<double> weights) {
        const Dataset data = load_dataset(csv);
        CrossValidationConfig c;
        c.learners = specs_from_names(kinds, seed);
        c.weights = std::move(weights);
        c.folds = folds;
        c.seed = seed;
        CrossValidationResult r;
        {
          py::gil_scoped_release release;
          r = cross_validate(data, c);
        }
        py::dict d;
        d["ensemble"] = report_dict(r.ensemble_mean);
        py::dict members;
        for (std::size_t i = 0; i < r.member_names.size(); ++i) members[py::str(r.member_names[i])] = report_dict(r.member_means[i]);
        d["members"] = members;
        d["report"] = render_cv_report(r);
        return d;
      },
      py::arg("csv"), py::arg("kinds") = std::vector<std::string>{"dt", "svm", "mlp"}, py::arg("folds") = 5,
      py::arg("seed") = 42, py::arg("weights") = std::vector<double>{});

  py::class_<MonitorConfig>(m, "MonitorConfig")
      .def(py::init<>())
      .def_readwrite("window_s", &MonitorConfig::window_s)
      .def_readwrite("abnormal_fraction", &MonitorConfig::abnormal_fraction)
      .def_readwrite("sedentary_threshold_s", &MonitorConfig::sedentary_threshold_s)
      .def_readwrite("standing_reset_s", &MonitorConfig::standing_reset_s)
      .def_readwrite("realert_interval_s", &MonitorConfig::realert_interval_s);

  py::class_<Monitor>(m, "Monitor")
      .def(py::init<const MonitorConfig&>(), py::arg("config") = MonitorConfig{})
      .def("tick", &Monitor::tick, py::arg("label"), "Advances one second; returns the alert lines raised.")
      .def("report", &Monitor::report)
      .def_property_readonly("seconds", &Monitor::seconds);

  m.def(
      "parse_report",
      [](const std::string& text) {
        const auto r = parse_report(text);
        py::dict d;
        d["session_s"] = r.session_s;
        d["wrong_frames"] = r.wrong_frames;
        d["bad_posture_windows"] = r.bad_posture_windows;
        d["sedentary_alerts"] = r.sedentary_alerts;
        d["total_sitting_s"] = r.total_sitting_s;
        d["total_standing_s"] = r.total_standing_s;
        d["bout_count"] = r.bout_count;
        d["average_bout_s"] = r.average_bout_s;
        d["max_bout_s"] = r.max_bout_s;
        return d;
      },
      py::arg("text"));
}
