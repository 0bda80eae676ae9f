#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bcgmil/error.hpp"
#include "bcgmil/io.hpp"
#include "bcgmil/pipeline.hpp"
#include "bcgmil/synth.hpp"

namespace py = pybind11;
using namespace bcgmil;

namespace {

std::vector<std::vector<std::pair<double, double>>> series_to_py(const ConfidenceSeries& s) {
  std::vector<std::vector<std::pair<double, double>>> out(s.size());
  for (size_t c = 0; c < s.size(); ++c) {
    for (const ScoredPeak& p : s[c]) out[c].emplace_back(p.time, p.confidence);
  }
  return out;
}

std::vector<std::pair<double, double>> rate_to_py(const std::vector<RatePoint>& rate) {
  std::vector<std::pair<double, double>> out;
  for (const RatePoint& r : rate) out.emplace_back(r.time, r.bpm);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the bcgmil heartbeat detector";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<DataError>(m, "DataError", base);
  py::register_exception<NumericalError>(m, "NumericalError", base);

  py::class_<Recording>(m, "Recording")
      .def(py::init<>())
      .def_readwrite("sample_rate", &Recording::sample_rate)
      .def_readwrite("channels", &Recording::channels)
      .def_readwrite("gt_beats", &Recording::gt_beats)
      .def_property_readonly("duration", &Recording::duration)
      .def("validate", &Recording::validate);

  py::class_<SubjectProfile>(m, "SubjectProfile")
      .def_readwrite("mean_rr", &SubjectProfile::mean_rr)
      .def_readwrite("rr_jitter", &SubjectProfile::rr_jitter)
      .def_readwrite("resp_freq", &SubjectProfile::resp_freq)
      .def_readwrite("resp_amp", &SubjectProfile::resp_amp)
      .def_readwrite("gt_lag", &SubjectProfile::gt_lag)
      .def_readwrite("gt_jitter", &SubjectProfile::gt_jitter)
      .def_readwrite("noise_sigma", &SubjectProfile::noise_sigma)
      .def_readwrite("dropout_channel", &SubjectProfile::dropout_channel)
      .def_readwrite("sample_rate", &SubjectProfile::sample_rate)
      .def("template_samples", &SubjectProfile::template_samples);

  m.def("make_profile", &make_profile, py::arg("seed"));
  m.def(
      "generate",
      [](const SubjectProfile& p, double duration, std::uint64_t seed) {
        SyntheticRecording syn = generate(p, duration, seed);
        return py::make_tuple(std::move(syn.recording), std::move(syn.true_beats));
      },
      py::arg("profile"), py::arg("duration"), py::arg("seed"),
      "Returns (recording, true_beats).");

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def(py::init([](const std::string& json_text) {
             RunConfig cfg;
             cfg.merge_json(json_text);
             return cfg;
           }),
           py::arg("json_text"))
      .def("set", &RunConfig::set, py::arg("key"), py::arg("json_value"))
      .def("merge_json", &RunConfig::merge_json)
      .def("to_json", &RunConfig::to_json)
      .def("validate", &RunConfig::validate)
      .def_static("keys", &RunConfig::keys);

  py::class_<TrainedModel>(m, "TrainedModel")
      .def_property_readonly("target",
                             [](const TrainedModel& t) { return Vector(t.concepts.target()); })
      .def_property_readonly("background_count",
                             [](const TrainedModel& t) { return t.concepts.background_count(); })
      .def_readonly("objective_trace", &TrainedModel::objective_trace)
      .def_readonly("iterations", &TrainedModel::iterations)
      .def_readonly("converged", &TrainedModel::converged)
      .def_readonly("positive_bags", &TrainedModel::positive_bags)
      .def_readonly("training_instances", &TrainedModel::training_instances);

  py::class_<Detection>(m, "Detection")
      .def_property_readonly("confidence", [](const Detection& d) { return series_to_py(d.series); })
      .def_readonly("beats", &Detection::beats)
      .def_property_readonly("rate", [](const Detection& d) { return rate_to_py(d.rate); })
      .def_readonly("start", &Detection::start)
      .def_readonly("end", &Detection::end);

  py::class_<Evaluation>(m, "Evaluation")
      .def_property_readonly("auc", [](const Evaluation& e) { return e.roc.auc; })
      .def_property_readonly("mean_abs_error", [](const Evaluation& e) { return e.rate.mean_abs_error; })
      .def_property_readonly("std_dev", [](const Evaluation& e) { return e.rate.std_dev; })
      .def_property_readonly("n_windows", [](const Evaluation& e) { return e.rate.n_windows; })
      .def_property_readonly("reference", [](const Evaluation& e) { return rate_to_py(e.reference); })
      .def_readonly("instances", &Evaluation::instances)
      .def_readonly("positives", &Evaluation::positives);

  m.def("train", &train, py::arg("recording"), py::arg("config") = RunConfig{},
        py::call_guard<py::gil_scoped_release>());
  m.def("detect", &detect, py::arg("recording"), py::arg("model"),
        py::arg("config") = RunConfig{}, py::call_guard<py::gil_scoped_release>());
  m.def(
      "evaluate",
      [](const Detection& det, const std::vector<double>& gt_beats, const RunConfig& cfg) {
        return evaluate(det.series, det.rate, gt_beats, det.start, det.end, cfg);
      },
      py::arg("detection"), py::arg("gt_beats"), py::arg("config") = RunConfig{});
  m.def("format_report", &format_report, py::arg("evaluation"), py::arg("config") = RunConfig{});

  m.def("model_to_text", &model_to_text);
  m.def("model_from_text", &model_from_text);
  m.def("write_model", &write_model, py::arg("path"), py::arg("model"));
  m.def("read_model", &read_model, py::arg("path"));
  m.def("write_recording", &write_recording, py::arg("csv_path"), py::arg("gt_path"),
        py::arg("recording"));
  m.def("read_recording", &read_recording, py::arg("csv_path"), py::arg("gt_path"));
}
