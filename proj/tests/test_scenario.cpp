#include "rankone/errors.hpp"
#include "rankone/scenario.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rankone;
using doctest::Approx;

namespace {

const char* kTwoAtom = R"({
  "schema_version": 1,
  "name": "two_atom",
  "measure": {"atoms": [[-1, 0.5], [1, 0.5]]},
  "alphas": [1],
  "epsilon_ladder": [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
  "discretization": 8
})";

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("rankone_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string error_of(const std::string& text) {
  try {
    parse_scenario_text(text, "s.json");
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("parse the two atom scenario") {
  const Scenario s = parse_scenario_text(kTwoAtom);
  CHECK(s.name == "two_atom");
  REQUIRE(s.measure.atoms().size() == 2);
  CHECK(s.measure.atoms()[0].position == -1.0);
  CHECK(s.measure.atoms()[1].mass == 0.5);
  CHECK(s.epsilon_ladder.size() == 6);
}

TEST_CASE("scenario validation errors") {
  CHECK(error_of(R"({"schema_version": 1, "name": "x", "measure": {"atoms": [[0, -1]]}})").find("mass > 0") !=
        std::string::npos);
  CHECK(error_of(R"({"schema_version": 1, "name": "x", "measure": {}, "bogus": 1})").find("bogus") !=
        std::string::npos);
  CHECK(error_of(R"({"schema_version": 2, "name": "x", "measure": {}})").find("schema_version") != std::string::npos);
  CHECK(error_of(R"({"schema_version": 1, "name": "x", "measure": {}, "epsilon_ladder": [1e-3, 1e-2]})")
            .find("strictly decreasing") != std::string::npos);
  CHECK(error_of("{\n  \"schema_version\": 1,\n  \"name\": \n}").find("s.json:4") != std::string::npos);
  const Scenario no_alphas = parse_scenario_text(R"({"schema_version": 1, "name": "x", "measure": {"atoms": [[0, 1]]}})");
  CHECK_THROWS_AS(validate_for(no_alphas, Command::Perturb), ValidationError);
  CHECK_THROWS_AS(validate_for(no_alphas, Command::Criterion), ValidationError);
  CHECK_NOTHROW(validate_for(no_alphas, Command::A2));
}

TEST_CASE("perturb report") {
  const RunReport r = run(parse_scenario_text(kTwoAtom), Command::Perturb);
  const auto& res = r.results["perturb"][0];
  CHECK(res["oracle"]["max_root_delta"].get<double>() < 1e-12);
  CHECK(res["oracle"]["max_mass_delta"].get<double>() < 1e-12);
  const auto& atoms = res["result"]["atoms"];
  CHECK(atoms[0]["root"].get<double>() == Approx((1.0 - std::sqrt(5.0)) / 2.0));
  CHECK(atoms[1]["mass"].get<double>() == Approx((5.0 + std::sqrt(5.0)) / 10.0));
  CHECK(r.tolerances.contains("oracle_tol"));
}

TEST_CASE("teps report") {
  const RunReport r = run(parse_scenario_text(kTwoAtom), Command::Teps);
  const auto& ladder = r.results["teps"][0]["ladder"];
  CHECK(ladder.size() == 6);
  for (const auto& row : ladder) CHECK(row["norm"].get<double>() <= 2.0);
  CHECK(r.results["teps"][0]["t_eps_one"]["max_residual"].get<double>() < 1e-3);
}

TEST_CASE("criterion report shows the method") {
  const Scenario s = parse_scenario_text(R"({
    "schema_version": 1, "name": "fried",
    "measure": {"ac": [{"interval": [0, 1], "weight": {"kind": "power_law", "params": {"c": 2, "p": 1}}}]},
    "alphas": [1], "interval": [0, 1]})");
  const RunReport r = run(s, Command::Criterion);
  const auto& v = r.results["criterion"]["verdicts"][0];
  CHECK(v["verdict"] == "NoSingularSpectrumOnI");
  CHECK(v["test"]["method"] == "Analytic");
}

TEST_CASE("json output is deterministic and round trips") {
  const Scenario s = parse_scenario_text(kTwoAtom);
  const auto d1 = scratch("a"), d2 = scratch("b");
  const auto p1 = emit(run(s, Command::All), Format::Json, d1);
  const auto p2 = emit(run(s, Command::All, {1e-8, 2}), Format::Json, d2);
  REQUIRE(p1.size() == 1);
  CHECK(read_file(p1[0]) == read_file(p2[0]));
  const RunReport back = load_report(p1[0]);
  CHECK(to_json(back) == nlohmann::json::parse(read_file(p1[0])));
  CHECK(back.results["failures"].empty());
}

TEST_CASE("csv and plot data emitters") {
  const RunReport r = run(parse_scenario_text(kTwoAtom), Command::Teps);
  const auto dir = scratch("c");
  const auto csv = emit(r, Format::Csv, dir);
  REQUIRE(!csv.empty());
  const std::string text = read_file(csv[0]);
  CHECK(text.rfind("eps,norm,bound", 0) == 0);
  const RunReport p = run(parse_scenario_text(kTwoAtom), Command::Perturb);
  const auto dat = emit(p, Format::Plotdata, dir);
  REQUIRE(!dat.empty());
  const std::string plot = read_file(dat[0]);
  CHECK(plot.rfind("# atoms_0\n", 0) == 0);
  CHECK(plot.find("-0.6180339887498949  0.27639320225002") != std::string::npos);
  CHECK_THROWS(emit(p, Format::Json, "/proc/rankone/forbidden"));
}
