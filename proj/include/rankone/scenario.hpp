#pragma once

#include "rankone/measure.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rankone {

inline constexpr int kSchemaVersion = 1;

enum class Command { Perturb, Vmatrix, Teps, A2, Jacobi, Criterion, All };
Command command_from_string(const std::string& s);
std::string to_string(Command c);

struct A2Options {
  int depth = 12;
  int shrink_levels = 40;
  std::vector<cplx> poisson_points;  // empty: hull centre + i {1, 0.1, 0.01}
};

struct LevelsetOptions {
  std::vector<double> t_grid;  // empty: no level-set scan
  std::size_t grid_points = 100000;
};

struct JacobiOptions {
  int n = 20;
};

struct CriterionOptions {
  std::vector<double> t_grid;  // empty: default grid
  std::optional<Measure> sigma;
  std::vector<double> probe_alphas;
};

struct Scenario {
  std::string name;
  Measure measure;
  std::vector<double> alphas;
  std::vector<double> epsilon_ladder;
  int discretization = 64;
  std::optional<Interval> interval;
  A2Options a2;
  LevelsetOptions levelset;
  JacobiOptions jacobi;
  CriterionOptions criterion;
};

// Strict: unknown fields rejected. Parse errors carry the line; invariant
// violations name the field and the invariant.
Scenario parse_scenario(const std::filesystem::path& path);
Scenario parse_scenario_text(const std::string& text, const std::string& origin = "<scenario>");
Scenario scenario_from_json(const nlohmann::json& j);

// Command-specific requirements (alphas for perturbation commands, an
// interval for criterion); ValidationError otherwise.
void validate_for(const Scenario& s, Command c);

struct RunOptions {
  double tol = 1e-8;
  int threads = 1;
};

struct DataTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct RunReport {
  std::string scenario;
  std::string command;
  std::string version;
  nlohmann::json tolerances;
  nlohmann::json results;
  std::vector<DataTable> tables;
  std::vector<PlotSeries> plots;
  double seconds = 0.0;  // wall time; not serialized
};

RunReport run(const Scenario& s, Command c, const RunOptions& opts = {});

enum class Format { Json, Csv, Plotdata };
Format format_from_string(const std::string& s);

nlohmann::json to_json(const RunReport& r);
RunReport report_from_json(const nlohmann::json& j);
RunReport load_report(const std::filesystem::path& path);

// Writes atomically (temp file + rename) into dir; returns the files written.
std::vector<std::filesystem::path> emit(const RunReport& r, Format f, const std::filesystem::path& dir);

}  // namespace rankone
