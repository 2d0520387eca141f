// Thin bindings: structured values cross the boundary as JSON text and are
// decoded by the Python package.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "wdose/cli.hpp"
#include "wdose/errors.hpp"
#include "wdose/evaluation.hpp"
#include "wdose/protocols.hpp"

namespace py = pybind11;
using namespace wdose;

namespace {

const TransitChainModel& default_model() {
  static const TransitChainModel m;
  return m;
}

PatientProfile patient_from(const std::string& text) {
  return nlohmann::json::parse(text).get<PatientProfile>();
}

py::tuple cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code;
  {
    py::gil_scoped_release release;
    code = run_cli(args, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

std::string generate(int n, std::uint64_t seed) {
  const CohortSampler sampler({}, default_model());
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : sampler.generate_cohort(n, seed)) j.push_back(p);
  return j.dump();
}

std::vector<double> simulate(const std::string& patient, const std::vector<double>& doses) {
  const auto p = patient_from(patient);
  PatientSimulator sim(default_model(), p);
  std::vector<double> inrs = {sim.latent_inr()};
  for (double d : doses) inrs.push_back(sim.advance(d));
  return inrs;
}

std::string baseline(const std::string& name, const std::string& patient) {
  const auto t = compose_and_run(named_composite(name), patient_from(patient),
                                 default_model(), ProtocolLibrary{}, EnvConfig{});
  return nlohmann::json(t).dump();
}

std::string greedy(const std::string& checkpoint, const std::string& patient) {
  const GreedyPolicy policy(load_checkpoint(checkpoint));
  return nlohmann::json(run_greedy_episode(policy, patient_from(patient), default_model()))
      .dump();
}

std::string report(const std::string& trajectory, const std::string& sensitivity) {
  const auto t = nlohmann::json::parse(trajectory).get<Trajectory>();
  Sensitivity s = Sensitivity::kNormal;
  for (auto c : {Sensitivity::kNormal, Sensitivity::kSensitive,
                 Sensitivity::kHighlySensitive}) {
    if (to_string(c) == sensitivity) s = c;
  }
  return nlohmann::json(make_patient_report(t, s, static_cast<int>(t.latent_inrs.size())))
      .dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataMismatchError>(m, "DataMismatchError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);

  m.def("run_cli", &cli, py::arg("args"));
  m.def("generate_cohort_json", &generate, py::arg("n"), py::arg("seed"));
  m.def("simulate", &simulate, py::arg("patient_json"), py::arg("doses"));
  m.def("run_baseline_json", &baseline, py::arg("name"), py::arg("patient_json"));
  m.def("run_checkpoint_json", &greedy, py::arg("checkpoint"), py::arg("patient_json"));
  m.def("patient_report_json", &report, py::arg("trajectory_json"), py::arg("sensitivity"));
  m.def("sensitivity", [](const std::string& cyp, const std::string& vk) {
    return std::string(to_string(classify_sensitivity(parse_cyp2c9(cyp), parse_vkorc1(vk))));
  }, py::arg("cyp2c9"), py::arg("vkorc1"));
  m.def("reward", [](const std::vector<double>& inrs) { return reward(inrs); },
        py::arg("daily_inrs"));
  m.def("pttr_daily", [](const std::vector<double>& v) { return pttr_daily(v); },
        py::arg("latent_inrs"));
  m.def("pttr_rosendaal",
        [](const std::vector<std::pair<int, double>>& points, int horizon) {
          std::vector<Measurement> m;
          for (const auto& [d, v] : points) m.push_back({d, v});
          return pttr_rosendaal(m, horizon);
        },
        py::arg("measurements"), py::arg("horizon"));
  m.def("baseline_names", &composite_names);
  m.attr("__version__") = "0.1.0";
}
