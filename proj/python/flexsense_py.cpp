#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "flexsense/array.hpp"
#include "flexsense/bench.hpp"
#include "flexsense/channel.hpp"
#include "flexsense/errors.hpp"
#include "flexsense/signals.hpp"
#include "flexsense/subspace_foc.hpp"
#include "flexsense/subspace_soc.hpp"

namespace py = pybind11;
using namespace flexsense;

namespace {

SearchMethod method_from(const std::string& name) {
  if (name == "grid") return SearchMethod::Grid;
  if (name == "newton") return SearchMethod::Newton;
  throw py::value_error("method must be 'grid' or 'newton'");
}

SnapshotMatrix as_snapshots(const CMatrix& y) { return SnapshotMatrix{y, 0.0}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Blind DOA estimation and sensing-assisted channel estimation for flexible-antenna arrays";

  py::register_exception<Error>(m, "FlexsenseError", PyExc_RuntimeError);

  py::class_<ArrayGeometry>(m, "ArrayGeometry")
      .def_readonly("n_ports", &ArrayGeometry::n_ports)
      .def_readonly("positions", &ArrayGeometry::positions)
      .def_readonly("omega", &ArrayGeometry::omega)
      .def_readonly("selected_positions", &ArrayGeometry::selected_positions)
      .def_property_readonly("n_active", &ArrayGeometry::n_active);

  m.def("build_geometry", &build_geometry, py::arg("n_ports"), py::arg("omega"), py::arg("spacing") = 1.0);
  m.def("coarray_dof", [](const ArrayGeometry& g) { return virtual_geometry(g).dof; });
  m.def("difference_set", [](const ArrayGeometry& g) { return virtual_geometry(g).diff_set; });
  m.def("steering_vector", &steering_vector, py::arg("positions"), py::arg("theta"));

  m.def("sample_covariance", py::overload_cast<const CMatrix&>(&sample_covariance), py::arg("snapshots"));
  m.def("foc_matrix", [](const CMatrix& y) { return foc_matrix(y).c4; }, py::arg("snapshots"));

  m.def(
      "estimate_doa_soc",
      [](const CMatrix& y, int k, const ArrayGeometry& g, const std::string& method) {
        return estimate_doa_soc(as_snapshots(y), k, g, method_from(method)).angles;
      },
      py::arg("snapshots"), py::arg("n_sources"), py::arg("geometry"), py::arg("method") = "newton");
  m.def(
      "estimate_doa_foc",
      [](const CMatrix& y, int k, const ArrayGeometry& g, const std::string& method) {
        return estimate_doa_foc(as_snapshots(y), k, g, method_from(method)).angles;
      },
      py::arg("snapshots"), py::arg("n_sources"), py::arg("geometry"), py::arg("method") = "newton");

  m.def(
      "calibrate_gains",
      [](const CMatrix& yp, const std::vector<double>& doas, const ArrayGeometry& g, const CMatrix& pilots) {
        return calibrate_gains(yp, all_detected(doas), g, pilots);
      },
      py::arg("pilot_block"), py::arg("doas"), py::arg("geometry"), py::arg("pilots"));
  m.def(
      "reconstruct_channel",
      [](const std::vector<double>& doas, const CVector& gains, const ArrayGeometry& g) {
        return reconstruct_channel(all_detected(doas), gains, g).h_full;
      },
      py::arg("doas"), py::arg("gains"), py::arg("geometry"));
  m.def("pilot_matrix", &gen_pilot_matrix, py::arg("n_sources"), py::arg("n_pilots"));
  m.def("nmse", &nmse, py::arg("h"), py::arg("h_hat"));
  m.def(
      "rmse_doa",
      [](const std::vector<double>& est, const std::vector<double>& truth, double penalty) {
        return rmse_doa(est, truth, penalty);
      },
      py::arg("estimated"), py::arg("truth"), py::arg("miss_penalty_deg") = 180.0);
  m.def(
      "theoretical_nmse",
      [](int n, int m_active, int k, int tp, double noise, double power) {
        const TheoryPoint t = theoretical_nmse(n, m_active, k, tp, noise, power);
        return py::make_tuple(t.e_conv, t.e_prop, t.eta);
      },
      py::arg("n_ports"), py::arg("n_active"), py::arg("n_sources"), py::arg("n_pilots"),
      py::arg("noise_power") = 1.0, py::arg("mean_power") = 1.0);

  m.def("scenarios", []() {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& s : builtin_scenarios()) out.emplace_back(s.name, s.description);
    return out;
  });
  m.def(
      "run_csv",
      [](const std::string& config_json) {
        const BenchConfig config = parse_config(config_json);
        RunReport report;
        {
          py::gil_scoped_release release;
          report = run_scenario(config);
        }
        return format_csv(report.rows);
      },
      py::arg("config_json"), "Run a scenario from a JSON config and return the CSV text.");
  m.def("theory_csv", [](const std::string& config_json) { return theory_csv(parse_config(config_json)); },
        py::arg("config_json"));
}
