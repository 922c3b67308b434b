#include "rankone/errors.hpp"
#include "rankone/logging.hpp"
#include "rankone/scenario.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

void print_summary(const rankone::RunReport& r) {
  std::cout << r.scenario << " / " << r.command << "  (" << r.seconds << " s)\n";
  const auto& res = r.results;
  if (res.contains("criterion") && res["criterion"].contains("verdicts")) {
    for (const auto& v : res["criterion"]["verdicts"]) {
      if (!v.contains("test")) continue;
      std::cout << "  alpha=" << v["alpha"] << "  " << v["verdict"].get<std::string>() << "  ["
                << v["test"]["method"].get<std::string>() << "]\n";
    }
  }
  if (res.contains("failures") && !res["failures"].empty())
    std::cout << "  failed sections: " << res["failures"].dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  rankone::log::init_from_env();
  CLI::App app{"rankone: rank-one perturbations of spectral measures"};
  app.set_version_flag("--version", std::string(RANKONE_VERSION));
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a scenario");
  std::string scenario_path, command, out_dir, format = "json";
  rankone::RunOptions opts;
  run->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  run->add_option("--command", command, "perturb|vmatrix|teps|a2|jacobi|criterion|all")
      ->required()
      ->check(CLI::IsMember({"perturb", "vmatrix", "teps", "a2", "jacobi", "criterion", "all"}));
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--format", format, "json|csv|plotdata")->check(CLI::IsMember({"json", "csv", "plotdata"}));
  run->add_option("--tol", opts.tol, "Relative tolerance for iterative norms")->check(CLI::PositiveNumber);
  run->add_option("--threads", opts.threads, "Worker threads")->check(CLI::Range(1, 256));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const rankone::Scenario s = rankone::parse_scenario(scenario_path);
    const rankone::Command c = rankone::command_from_string(command);
    const rankone::RunReport r = rankone::run(s, c, opts);
    for (const auto& p : rankone::emit(r, rankone::format_from_string(format), out_dir)) std::cout << p.string() << "\n";
    print_summary(r);
    return 0;
  } catch (const rankone::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << scenario_path << ": " << e.what() << "\n";
    return 1;
  }
}
