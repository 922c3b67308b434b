#include "rankone/cauchy.hpp"
#include "rankone/criterion.hpp"
#include "rankone/errors.hpp"
#include "rankone/jacobi.hpp"
#include "rankone/measure_json.hpp"
#include "rankone/rank_one.hpp"
#include "rankone/scenario.hpp"

#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace rankone;

namespace {

// Measures and reports cross the boundary as JSON text; the Python side
// wraps these with json.dumps / json.loads.
Measure measure_arg(const std::string& text) { return measure_from_json(nlohmann::json::parse(text)); }

std::string dump(const nlohmann::json& j) { return j.dump(); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.attr("__version__") = RANKONE_VERSION;

  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  m.def("borel_transform", [](const std::string& mu, cplx z) { return borel_transform(measure_arg(mu), z); });
  m.def("total_mass", [](const std::string& mu) { return measure_arg(mu).total_mass(); });

  m.def("perturb", [](const std::string& mu, double alpha) {
    py::gil_scoped_release nogil;
    return dump(to_json(perturb(measure_arg(mu), alpha)));
  });
  m.def("secular_roots", [](const std::string& mu, double alpha) {
    std::vector<double> out;
    for (const auto& r : secular_roots(measure_arg(mu), alpha).roots) out.push_back(r.root);
    return out;
  });

  m.def("jacobi_from_measure", [](const std::string& mu, int n) {
    const JacobiFromMeasure r = jacobi_from_measure(measure_arg(mu), n);
    nlohmann::json j = to_json(r.params);
    j["breakdown"] = r.breakdown ? nlohmann::json(*r.breakdown) : nlohmann::json(nullptr);
    return dump(j);
  });
  m.def("killip_simon_check", [](const std::string& mu) { return dump(to_json(killip_simon_check(measure_arg(mu)))); });

  m.def("verdict", [](const std::string& mu, double lo, double hi, double alpha) {
    py::gil_scoped_release nogil;
    return dump(to_json(verdict(measure_arg(mu), Interval(lo, hi), alpha)));
  });

  m.def(
      "run_scenario",
      [](const std::string& text, const std::string& command, int threads, double tol) {
        const Scenario s = parse_scenario_text(text, "<python>");
        py::gil_scoped_release nogil;
        return dump(to_json(run(s, command_from_string(command), RunOptions{tol, threads})));
      },
      py::arg("text"), py::arg("command"), py::arg("threads") = 1, py::arg("tol") = 1e-8);
}
