#include "rankone/scenario.hpp"

#include "rankone/cauchy.hpp"
#include "rankone/criterion.hpp"
#include "rankone/errors.hpp"
#include "rankone/jacobi.hpp"
#include "rankone/logging.hpp"
#include "rankone/measure_json.hpp"
#include "rankone/rank_one.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#ifndef RANKONE_VERSION
#define RANKONE_VERSION "0.0.0"
#endif

namespace rankone {

using nlohmann::json;

namespace {

constexpr double kOracleTol = 1e-10;
constexpr double kRootRelTol = 1e-13;
constexpr double kUnitarityTol = 1e-8;
constexpr double kRigidityTol = 1e-6;
constexpr double kBoundSlack = 1e-6;
constexpr double kRefinementTol = 0.05;
constexpr double kMassTol = 1e-10;

void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ValidationError(where + ": unknown field \"" + key + "\"");
}

std::vector<double> number_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw ValidationError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ValidationError(where + ": expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

int integer(const json& j, const std::string& where, int min_value) {
  if (!j.is_number_integer()) throw ValidationError(where + ": expected an integer");
  const int v = j.get<int>();
  if (v < min_value) throw ValidationError(where + ": invariant violated: >= " + std::to_string(min_value));
  return v;
}

void strictly_decreasing_positive(const std::vector<double>& v, const std::string& where) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0)) throw ValidationError(where + ": invariant violated: entries > 0");
    if (i > 0 && !(v[i] < v[i - 1])) throw ValidationError(where + ": invariant violated: strictly decreasing");
  }
}

void strictly_increasing_positive(const std::vector<double>& v, const std::string& where) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0)) throw ValidationError(where + ": invariant violated: entries > 0");
    if (i > 0 && !(v[i] > v[i - 1])) throw ValidationError(where + ": invariant violated: strictly increasing");
  }
}

std::vector<double> default_ladder() {
  std::vector<double> v;
  for (int k = 0; k <= 6; ++k) v.push_back(std::pow(10.0, -k));
  return v;
}

// Runs f(0..n-1) on up to `threads` workers; results keep index order and the
// first exception (by index) is rethrown.
template <class T>
std::vector<T> parallel_map(std::size_t n, int threads, const std::function<T(std::size_t)>& f) {
  std::vector<T> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int k = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (k == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < k; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

struct Section {
  json results = json::object();
  std::vector<DataTable> tables;
  std::vector<PlotSeries> plots;

  void absorb(Section&& other) {
    for (auto& t : other.tables) tables.push_back(std::move(t));
    for (auto& p : other.plots) plots.push_back(std::move(p));
  }
};

DiscreteMeasure perturbed_discrete(const DiscreteMeasure& d, double alpha) {
  const auto r = perturb(d.to_measure(), alpha);
  std::vector<double> s, v;
  for (const auto& a : r.perturbed.atoms()) {
    s.push_back(a.position);
    v.push_back(a.mass);
  }
  return DiscreteMeasure(std::move(s), std::move(v));
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Section perturb_section(const Scenario& s, const RunOptions& opts) {
  const DiscreteMeasure d = discretize(s.measure, s.discretization);
  auto per_alpha = parallel_map<Section>(s.alphas.size(), opts.threads, [&](std::size_t i) {
    const double alpha = s.alphas[i];
    Section out;
    const PerturbationResult r = perturb(s.measure, alpha);
    const DirectPerturbation direct = direct_discrete_perturbation(d, alpha);
    const DiscreteMeasure secular = alpha == 0.0 ? d : perturbed_discrete(d, alpha);
    const double droot = max_abs_diff(secular.nodes(), direct.perturbed.nodes());
    const double dmass = max_abs_diff(secular.weights(), direct.perturbed.weights());
    out.results = {{"alpha", alpha},
                   {"result", to_json(r)},
                   {"oracle",
                    {{"nodes", d.size()},
                     {"max_root_delta", json_number(droot)},
                     {"max_mass_delta", json_number(dmass)},
                     {"tolerance", kOracleTol},
                     {"pass", droot <= kOracleTol && dmass <= kOracleTol}}}};
    DataTable atoms{"atoms_" + std::to_string(i), {"alpha", "root", "mass"}, {}};
    PlotSeries stems{"atoms_" + std::to_string(i), {}, {}};
    for (const auto& a : r.perturbed.atoms()) {
      atoms.rows.push_back({alpha, a.position, a.mass});
      stems.x.push_back(a.position);
      stems.y.push_back(a.mass);
    }
    out.tables.push_back(std::move(atoms));
    out.plots.push_back(std::move(stems));
    int k = 0;
    for (const auto& p : r.perturbed.pieces()) {
      if (const auto* t = std::get_if<weight::Table>(&p.weight))
        out.plots.push_back({"density_" + std::to_string(i) + "_" + std::to_string(k++), t->x, t->y});
    }
    return out;
  });
  Section sec;
  sec.results = json::array();
  for (auto& p : per_alpha) {
    sec.results.push_back(std::move(p.results));
    sec.absorb(std::move(p));
  }
  return sec;
}

Section vmatrix_section(const Scenario& s, const RunOptions& opts) {
  const DiscreteMeasure d = discretize(s.measure, s.discretization);
  auto rows = parallel_map<json>(s.alphas.size(), opts.threads, [&](std::size_t i) {
    const double alpha = s.alphas[i];
    const DiscreteMeasure nu = perturbed_discrete(d, alpha);
    const RepresentationMatrix v = representation_matrix(d, nu, alpha);
    const UnitarityDefect def = unitarity_defect(v);
    json rigidity;
    try {
      const RigidityResult rr = rigidity_normalizer(v.matrix);
      rigidity = {{"max_h_deviation", (rr.h.array() - 1.0).abs().maxCoeff()},
                  {"offdiag_residual", rr.offdiag_residual},
                  {"normalized_defect", {rr.normalized_defect.left, rr.normalized_defect.right}},
                  {"tolerance", kRigidityTol}};
    } catch (const DomainError& e) {
      rigidity = {{"error", e.what()}};
    }
    auto f = [](double x) { return std::cos(3.0 * x) + 0.25 * x * x; };
    Eigen::VectorXcd fv(d.size());
    for (std::size_t j = 0; j < d.size(); ++j) fv(j) = f(d.nodes()[j]);
    const Eigen::VectorXd via_matrix = v.matrix.apply(fv).real();
    const double tweak_diff = (tweak_reconstruction(d, nu, alpha, f) - via_matrix).cwiseAbs().maxCoeff();
    const double general_diff = (apply_representation(d, nu, alpha, f) - via_matrix).cwiseAbs().maxCoeff();
    return json{{"alpha", alpha},
                {"n", d.size()},
                {"unitarity_defect", {{"left", def.left}, {"right", def.right}, {"tolerance", kUnitarityTol}}},
                {"secular_residual", v.secular_residual},
                {"rigidity", rigidity},
                {"tweak_vs_matrix", tweak_diff},
                {"general_vs_matrix", general_diff}};
  });
  Section sec;
  sec.results = json::array();
  DataTable t{"vmatrix", {"alpha", "n", "left_defect", "right_defect", "secular_residual", "tweak_diff"}, {}};
  for (auto& r : rows) {
    t.rows.push_back({r["alpha"].get<double>(), r["n"].get<double>(), r["unitarity_defect"]["left"].get<double>(),
                      r["unitarity_defect"]["right"].get<double>(), r["secular_residual"].get<double>(),
                      r["tweak_vs_matrix"].get<double>()});
    sec.results.push_back(std::move(r));
  }
  sec.tables.push_back(std::move(t));
  return sec;
}

Section teps_section(const Scenario& s, const RunOptions& opts) {
  const DiscreteMeasure d = discretize(s.measure, s.discretization);
  auto per_alpha = parallel_map<Section>(s.alphas.size(), opts.threads, [&](std::size_t i) {
    const double alpha = s.alphas[i];
    const DiscreteMeasure nu = perturbed_discrete(d, alpha);
    const double bound = 2.0 / std::abs(alpha);
    Section out;
    DataTable t{"teps_" + std::to_string(i), {"eps", "norm", "bound", "truncated_norm"}, {}};
    PlotSeries p{"teps_" + std::to_string(i), {}, {}};
    json ladder = json::array();
    bool all_within = true;
    for (double eps : s.epsilon_ladder) {
      const NormEstimate n = operator_norm(regularized_matrix(d, nu, eps), opts.tol);
      const NormEstimate nt = operator_norm(truncated_matrix(d, nu, eps), opts.tol);
      const bool within = n.value <= bound * (1.0 + kBoundSlack);
      all_within = all_within && within;
      ladder.push_back({{"eps", eps},
                        {"norm", n.value},
                        {"converged", n.converged},
                        {"iterations", n.iterations},
                        {"truncated_norm", nt.value},
                        {"within_bound", within}});
      t.rows.push_back({eps, n.value, bound, nt.value});
      p.x.push_back(eps);
      p.y.push_back(n.value);
    }
    const auto limits = t_eps_one_limit(d, nu, alpha, s.epsilon_ladder);
    double max_res = 0.0;
    json lim = json::array();
    for (const auto& row : limits) {
      max_res = std::max(max_res, row.residual);
      lim.push_back({{"s", row.s},
                     {"value_re", row.ladder.back().second.real()},
                     {"value_im", row.ladder.back().second.imag()},
                     {"target", row.target},
                     {"residual", row.residual},
                     {"rate", json_number(row.rate)}});
    }
    out.results = {{"alpha", alpha},
                   {"bound", bound},
                   {"tolerance", opts.tol},
                   {"bound_slack", kBoundSlack},
                   {"all_within_bound", all_within},
                   {"ladder", ladder},
                   {"t_eps_one", {{"max_residual", max_res}, {"rows", lim}}}};
    out.tables.push_back(std::move(t));
    out.plots.push_back(std::move(p));
    return out;
  });
  Section sec;
  sec.results = json::array();
  for (auto& p : per_alpha) {
    sec.results.push_back(std::move(p.results));
    sec.absorb(std::move(p));
  }
  return sec;
}

json interval_json(const Interval& I) { return json::array({I.lo, I.hi}); }

Section a2_section(const Scenario& s, const RunOptions& opts) {
  std::vector<std::pair<std::string, double>> labels;
  if (s.alphas.empty()) labels.emplace_back("self", 0.0);
  for (double a : s.alphas) labels.emplace_back("alpha", a);
  auto per_pair = parallel_map<Section>(labels.size(), opts.threads, [&](std::size_t i) {
    const double alpha = labels[i].second;
    const Measure nu = alpha == 0.0 ? s.measure : perturb(s.measure, alpha).perturbed;
    Section out;
    const auto fine = a2_candidates(s.measure, nu, s.a2.depth, s.a2.shrink_levels);
    const auto coarse = a2_candidates(s.measure, nu, std::max(0, s.a2.depth - 2), s.a2.shrink_levels);
    const A2Report rf = interval_a2_sup(s.measure, nu, fine);
    const A2Report rc = interval_a2_sup(s.measure, nu, coarse);
    const double change = rf.sup_value > 0.0 ? std::abs(rf.sup_value - rc.sup_value) / rf.sup_value : 0.0;
    std::vector<cplx> points = s.a2.poisson_points;
    if (points.empty()) {
      const Interval h = s.measure.hull();
      const double c = 0.5 * (h.lo + h.hi);
      for (double y : {1.0, 0.1, 0.01}) points.emplace_back(c, y);
    }
    json poisson = json::array();
    for (const cplx& a : points)
      poisson.push_back({{"re", a.real()}, {"im", a.imag()}, {"value", json_number(poisson_a2(s.measure, nu, a))}});
    json scans = json::array();
    DataTable scan_table{"atom_scan_" + std::to_string(i), {"center", "h", "value"}, {}};
    const Interval hull = s.measure.hull();
    for (const auto& a : s.measure.atoms()) {
      const bool shared = std::any_of(nu.atoms().begin(), nu.atoms().end(),
                                      [&](const Atom& b) { return std::abs(a.position - b.position) <= 1e-12; });
      if (!shared) continue;
      const auto scan = atom_centered_scan(s.measure, nu, a.position, std::max(hull.length(), 1.0) / 2.0, 40);
      scans.push_back({{"center", scan.center},
                       {"growth_per_halving", scan.growth_per_halving},
                       {"divergent", scan.divergent}});
      for (const auto& [h, v] : scan.values) scan_table.rows.push_back({scan.center, h, v});
    }
    out.results = {{"pair", labels[i].first},
                   {"alpha", alpha},
                   {"interval_sup", json_number(rf.sup_value)},
                   {"witness", interval_json(rf.witness)},
                   {"candidates", rf.candidates},
                   {"grid_resolution", rf.grid_resolution},
                   {"coarse_sup", json_number(rc.sup_value)},
                   {"refinement_change", change},
                   {"refinement_tolerance", kRefinementTol},
                   {"poisson", poisson},
                   {"shared_atom_scans", scans}};
    out.tables.push_back({"a2_" + std::to_string(i),
                          {"alpha", "sup", "witness_lo", "witness_hi", "coarse_sup"},
                          {{alpha, rf.sup_value, rf.witness.lo, rf.witness.hi, rc.sup_value}}});
    if (!scan_table.rows.empty()) out.tables.push_back(std::move(scan_table));
    return out;
  });
  Section sec;
  sec.results = {{"pairs", json::array()}};
  for (auto& p : per_pair) {
    sec.results["pairs"].push_back(std::move(p.results));
    sec.absorb(std::move(p));
  }
  if (!s.levelset.t_grid.empty()) {
    if (!s.interval) throw ValidationError("options.levelset: requires \"interval\"");
    const LevelsetTail tail = levelset_tail(s.measure, *s.interval, s.levelset.t_grid, s.levelset.grid_points);
    DataTable t{"levelset", {"t", "measure", "product"}, {}};
    for (std::size_t i = 0; i < tail.t.size(); ++i) t.rows.push_back({tail.t[i], tail.measure[i], tail.product[i]});
    sec.results["levelset"] = {{"interval", interval_json(*s.interval)},
                               {"grid_points", tail.grid_points},
                               {"t", tail.t},
                               {"measure", tail.measure},
                               {"product", tail.product},
                               {"slope", json_number(tail.slope)},
                               {"excluded", tail.excluded}};
    sec.plots.push_back({"levelset", tail.t, tail.product});
    sec.tables.push_back(std::move(t));
  }
  return sec;
}

Section jacobi_section(const Scenario& s, const RunOptions&) {
  const double mass = s.measure.total_mass();
  if (std::abs(mass - 1.0) > 1e-9)
    throw DomainError("jacobi: measure must have mass 1 (got " + std::to_string(mass) + ")");
  Section sec;
  const JacobiFromMeasure jf = jacobi_from_measure(s.measure, s.jacobi.n);
  const JacobiParams& J = jf.params;
  const DiscreteMeasure m = measure_from_jacobi(J);
  const JacobiFromMeasure back = jacobi_from_measure(m, static_cast<int>(J.size()));
  const double roundtrip = std::max(max_abs_diff(J.a, back.params.a), max_abs_diff(J.b, back.params.b));
  json consistency = json::array();
  for (double alpha : s.alphas) {
    const DiscreteMeasure via_jacobi = measure_from_jacobi(perturb_b1(J, alpha));
    const DiscreteMeasure via_rank_one = alpha == 0.0 ? m : perturbed_discrete(m, alpha);
    consistency.push_back({{"alpha", alpha},
                           {"max_node_delta", json_number(max_abs_diff(via_jacobi.nodes(), via_rank_one.nodes()))},
                           {"max_weight_delta",
                            json_number(max_abs_diff(via_jacobi.weights(), via_rank_one.weights()))},
                           {"hilbert_schmidt_defect", hilbert_schmidt_defect(perturb_b1(J, alpha))}});
  }
  sec.results = {{"n", s.jacobi.n},
                 {"params", to_json(J)},
                 {"breakdown", jf.breakdown ? json(*jf.breakdown) : json(nullptr)},
                 {"roundtrip_delta", json_number(roundtrip)},
                 {"hilbert_schmidt_defect", hilbert_schmidt_defect(J)},
                 {"b1_consistency", consistency},
                 {"killip_simon", to_json(killip_simon_check(s.measure, kMassTol))}};
  DataTable t{"jacobi", {"n", "a", "b"}, {}};
  PlotSeries pa{"jacobi_a", {}, {}}, pb{"jacobi_b", {}, {}};
  for (std::size_t k = 0; k < J.b.size(); ++k) {
    const double a = k < J.a.size() ? J.a[k] : std::numeric_limits<double>::quiet_NaN();
    t.rows.push_back({double(k + 1), a, J.b[k]});
    pb.x.push_back(double(k + 1));
    pb.y.push_back(J.b[k]);
    if (k < J.a.size()) {
      pa.x.push_back(double(k + 1));
      pa.y.push_back(a);
    }
  }
  sec.tables.push_back(std::move(t));
  sec.plots.push_back(std::move(pa));
  sec.plots.push_back(std::move(pb));
  return sec;
}

Section criterion_section(const Scenario& s, const RunOptions&) {
  if (!s.interval) throw ValidationError("criterion: scenario needs \"interval\"");
  const Interval I = *s.interval;
  Section sec;
  const EquivalenceAudit audit = equivalence_audit(s.measure, I);
  const auto grid = s.criterion.t_grid.empty() ? default_t_grid() : s.criterion.t_grid;
  const OLittleResult ol = olittle_test(s.measure, I, grid);
  json verdicts = json::array();
  for (double alpha : s.alphas) {
    if (alpha == 0.0) {
      verdicts.push_back({{"alpha", alpha}, {"error", "precondition violated: alpha != 0"}});
      continue;
    }
    json v = to_json(verdict(s.measure, I, alpha));
    v["alpha"] = alpha;
    verdicts.push_back(std::move(v));
  }
  sec.results = {{"interval", interval_json(I)},
                 {"rearrangement_test", to_json(audit.rearrangement)},
                 {"distribution_test", to_json(audit.distribution)},
                 {"equivalence_audit", audit.agree},
                 {"olittle_test", to_json(ol)},
                 {"verdicts", verdicts}};
  if (s.criterion.sigma) {
    const AveragedSetup setup = averaged_setup(s.measure, *s.criterion.sigma);
    json probes = json::array();
    for (double alpha : s.criterion.probe_alphas) {
      const EProbe e = setup.E(alpha);
      json entry = {{"alpha", alpha}, {"finite", e.finite}, {"value", json_number(e.value)}};
      if (alpha != 0.0) entry["verdict"] = to_json(verdict(s.measure, I, alpha, setup));
      probes.push_back(std::move(entry));
    }
    sec.results["averaged"] = {{"tau_mass", setup.tau_mass},
                               {"expected_mass", setup.expected_mass},
                               {"beta_nodes", setup.beta_nodes.size()},
                               {"probes", probes}};
  }
  DataTable shells{"criterion_shells", {"k", "rearrangement", "distribution"}, {}};
  const std::size_t n = std::max(audit.rearrangement.ladder.size(), audit.distribution.ladder.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < n; ++k)
    shells.rows.push_back({double(k), k < audit.rearrangement.ladder.size() ? audit.rearrangement.ladder[k] : nan,
                           k < audit.distribution.ladder.size() ? audit.distribution.ladder[k] : nan});
  DataTable olt{"olittle", {"t", "product"}, {}};
  for (std::size_t k = 0; k < ol.t.size(); ++k) olt.rows.push_back({ol.t[k], ol.product[k]});
  sec.tables.push_back(std::move(shells));
  sec.tables.push_back(std::move(olt));
  sec.plots.push_back({"olittle", ol.t, ol.product});
  return sec;
}

json tolerances(const Scenario& s, const RunOptions& opts) {
  return {{"norm_rel_tol", opts.tol},
          {"root_rel_tol", kRootRelTol},
          {"oracle_tol", kOracleTol},
          {"unitarity_tol", kUnitarityTol},
          {"rigidity_tol", kRigidityTol},
          {"reg2_bound_slack", kBoundSlack},
          {"a2_refinement_tol", kRefinementTol},
          {"killip_simon_mass_tol", kMassTol},
          {"boundary_eps_ladder", default_eps_ladder()},
          {"epsilon_ladder", s.epsilon_ladder},
          {"discretization", s.discretization}};
}

std::string sanitize(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("emit: cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("emit: write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw std::runtime_error("emit: cannot rename into " + path.string());
  }
}

std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Command command_from_string(const std::string& s) {
  if (s == "perturb") return Command::Perturb;
  if (s == "vmatrix") return Command::Vmatrix;
  if (s == "teps") return Command::Teps;
  if (s == "a2") return Command::A2;
  if (s == "jacobi") return Command::Jacobi;
  if (s == "criterion") return Command::Criterion;
  if (s == "all") return Command::All;
  throw ValidationError("unknown command \"" + s + "\"");
}

std::string to_string(Command c) {
  switch (c) {
    case Command::Perturb: return "perturb";
    case Command::Vmatrix: return "vmatrix";
    case Command::Teps: return "teps";
    case Command::A2: return "a2";
    case Command::Jacobi: return "jacobi";
    case Command::Criterion: return "criterion";
    case Command::All: return "all";
  }
  return "all";
}

Format format_from_string(const std::string& s) {
  if (s == "json") return Format::Json;
  if (s == "csv") return Format::Csv;
  if (s == "plotdata") return Format::Plotdata;
  throw ValidationError("unknown format \"" + s + "\"");
}

Scenario scenario_from_json(const json& j) {
  only_keys(j, {"schema_version", "name", "measure", "alphas", "epsilon_ladder", "discretization", "interval", "options"},
            "scenario");
  if (!j.contains("schema_version")) throw ValidationError("scenario: missing field \"schema_version\"");
  if (!j.at("schema_version").is_number_integer() || j.at("schema_version").get<int>() != kSchemaVersion)
    throw ValidationError("schema_version: unsupported (expected " + std::to_string(kSchemaVersion) + ")");
  Scenario s;
  if (!j.contains("name") || !j.at("name").is_string()) throw ValidationError("name: expected a string");
  s.name = j.at("name").get<std::string>();
  if (s.name.empty()) throw ValidationError("name: invariant violated: nonempty");
  if (!j.contains("measure")) throw ValidationError("scenario: missing field \"measure\"");
  s.measure = measure_from_json(j.at("measure"), "measure");
  if (j.contains("alphas")) s.alphas = number_list(j.at("alphas"), "alphas");
  s.epsilon_ladder = j.contains("epsilon_ladder") ? number_list(j.at("epsilon_ladder"), "epsilon_ladder")
                                                  : default_ladder();
  if (s.epsilon_ladder.empty()) throw ValidationError("epsilon_ladder: invariant violated: nonempty");
  strictly_decreasing_positive(s.epsilon_ladder, "epsilon_ladder");
  if (j.contains("discretization")) s.discretization = integer(j.at("discretization"), "discretization", 1);
  if (j.contains("interval")) {
    const auto iv = number_list(j.at("interval"), "interval");
    if (iv.size() != 2) throw ValidationError("interval: expected [a, b]");
    if (!(iv[0] <= iv[1])) throw ValidationError("interval: invariant violated: a <= b");
    s.interval = Interval(iv[0], iv[1]);
  }
  if (j.contains("options")) {
    const json& o = j.at("options");
    only_keys(o, {"a2", "levelset", "jacobi", "criterion"}, "options");
    if (o.contains("a2")) {
      const json& a = o.at("a2");
      only_keys(a, {"depth", "shrink_levels", "poisson_points"}, "options.a2");
      if (a.contains("depth")) s.a2.depth = integer(a.at("depth"), "options.a2.depth", 0);
      if (a.contains("shrink_levels")) s.a2.shrink_levels = integer(a.at("shrink_levels"), "options.a2.shrink_levels", 0);
      if (a.contains("poisson_points")) {
        const json& pts = a.at("poisson_points");
        if (!pts.is_array()) throw ValidationError("options.a2.poisson_points: expected [[re, im], ...]");
        for (std::size_t i = 0; i < pts.size(); ++i) {
          const auto p = number_list(pts[i], "options.a2.poisson_points[" + std::to_string(i) + "]");
          if (p.size() != 2 || !(p[1] > 0.0))
            throw ValidationError("options.a2.poisson_points[" + std::to_string(i) + "]: invariant violated: Im a > 0");
          s.a2.poisson_points.emplace_back(p[0], p[1]);
        }
      }
    }
    if (o.contains("levelset")) {
      const json& l = o.at("levelset");
      only_keys(l, {"t_grid", "grid_points"}, "options.levelset");
      if (l.contains("t_grid")) s.levelset.t_grid = number_list(l.at("t_grid"), "options.levelset.t_grid");
      strictly_increasing_positive(s.levelset.t_grid, "options.levelset.t_grid");
      if (l.contains("grid_points"))
        s.levelset.grid_points = static_cast<std::size_t>(integer(l.at("grid_points"), "options.levelset.grid_points", 1));
    }
    if (o.contains("jacobi")) {
      const json& jj = o.at("jacobi");
      only_keys(jj, {"n"}, "options.jacobi");
      if (jj.contains("n")) s.jacobi.n = integer(jj.at("n"), "options.jacobi.n", 1);
    }
    if (o.contains("criterion")) {
      const json& c = o.at("criterion");
      only_keys(c, {"t_grid", "sigma", "probe_alphas"}, "options.criterion");
      if (c.contains("t_grid")) s.criterion.t_grid = number_list(c.at("t_grid"), "options.criterion.t_grid");
      strictly_increasing_positive(s.criterion.t_grid, "options.criterion.t_grid");
      if (c.contains("sigma")) s.criterion.sigma = measure_from_json(c.at("sigma"), "options.criterion.sigma");
      if (c.contains("probe_alphas"))
        s.criterion.probe_alphas = number_list(c.at("probe_alphas"), "options.criterion.probe_alphas");
    }
  }
  return s;
}

Scenario parse_scenario_text(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw ValidationError(origin + ":" + std::to_string(line) + ": parse error: " + e.what());
  }
  try {
    return scenario_from_json(j);
  } catch (const ValidationError& e) {
    throw ValidationError(origin + ": " + e.what());
  }
}

Scenario parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path.string() + ": cannot open scenario file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), path.string());
}

void validate_for(const Scenario& s, Command c) {
  const bool needs_alphas = c == Command::Perturb || c == Command::Vmatrix || c == Command::Teps || c == Command::All;
  if (needs_alphas && s.alphas.empty())
    throw ValidationError("alphas: invariant violated: nonempty for command " + to_string(c));
  if (c == Command::Vmatrix || c == Command::Teps || c == Command::All)
    for (double a : s.alphas)
      if (a == 0.0) throw ValidationError("alphas: invariant violated: alpha != 0 for command " + to_string(c));
  if (c == Command::Criterion && !s.interval) throw ValidationError("interval: required for command criterion");
}

RunReport run(const Scenario& s, Command c, const RunOptions& opts) {
  validate_for(s, c);
  const auto start = std::chrono::steady_clock::now();
  RunReport r;
  r.scenario = s.name;
  r.command = to_string(c);
  r.version = RANKONE_VERSION;
  r.tolerances = tolerances(s, opts);
  r.results = json::object();
  auto add = [&](const std::string& key, Section sec) {
    r.results[key] = std::move(sec.results);
    for (auto& t : sec.tables) r.tables.push_back(std::move(t));
    for (auto& p : sec.plots) r.plots.push_back(std::move(p));
  };
  using Runner = std::function<Section(const Scenario&, const RunOptions&)>;
  const std::vector<std::pair<Command, Runner>> all = {
      {Command::Perturb, perturb_section}, {Command::Vmatrix, vmatrix_section}, {Command::Teps, teps_section},
      {Command::A2, a2_section},           {Command::Jacobi, jacobi_section},   {Command::Criterion, criterion_section}};
  if (c == Command::All) {
    json failures = json::array();
    for (const auto& [cmd, runner] : all) {
      try {
        if (cmd == Command::Criterion && !s.interval) {
          r.results[to_string(cmd)] = {{"skipped", "no interval in scenario"}};
          continue;
        }
        log::info("running section " + to_string(cmd));
        add(to_string(cmd), runner(s, opts));
      } catch (const DomainError& e) {
        r.results[to_string(cmd)] = {{"error", e.what()}};
        failures.push_back(to_string(cmd));
      }
    }
    r.results["failures"] = failures;
  } else {
    for (const auto& [cmd, runner] : all)
      if (cmd == c) add(to_string(cmd), runner(s, opts));
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  log::info("run " + r.scenario + "/" + r.command + " took " + std::to_string(r.seconds) + " s");
  return r;
}

json to_json(const RunReport& r) {
  json tables = json::array();
  for (const auto& t : r.tables) {
    json rows = json::array();
    for (const auto& row : t.rows) {
      json jr = json::array();
      for (double v : row) jr.push_back(json_number(v));
      rows.push_back(std::move(jr));
    }
    tables.push_back({{"name", t.name}, {"columns", t.columns}, {"rows", rows}});
  }
  json plots = json::array();
  for (const auto& p : r.plots) {
    json x = json::array(), y = json::array();
    for (double v : p.x) x.push_back(json_number(v));
    for (double v : p.y) y.push_back(json_number(v));
    plots.push_back({{"name", p.name}, {"x", x}, {"y", y}});
  }
  return {{"schema_version", kSchemaVersion},
          {"tool", "rankone"},
          {"version", r.version},
          {"scenario", r.scenario},
          {"command", r.command},
          {"tolerances", r.tolerances},
          {"results", r.results},
          {"tables", tables},
          {"plots", plots}};
}

RunReport report_from_json(const json& j) {
  only_keys(j, {"schema_version", "tool", "version", "scenario", "command", "tolerances", "results", "tables", "plots"},
            "report");
  if (!j.contains("schema_version") || j.at("schema_version") != kSchemaVersion)
    throw ValidationError("report: unsupported schema_version");
  RunReport r;
  try {
    r.version = j.at("version").get<std::string>();
    r.scenario = j.at("scenario").get<std::string>();
    r.command = j.at("command").get<std::string>();
    r.tolerances = j.at("tolerances");
    r.results = j.at("results");
    for (const auto& t : j.at("tables")) {
      DataTable dt{t.at("name").get<std::string>(), t.at("columns").get<std::vector<std::string>>(), {}};
      for (const auto& row : t.at("rows")) {
        std::vector<double> v;
        for (const auto& x : row) v.push_back(number_from_json(x));
        dt.rows.push_back(std::move(v));
      }
      r.tables.push_back(std::move(dt));
    }
    for (const auto& p : j.at("plots")) {
      PlotSeries ps{p.at("name").get<std::string>(), {}, {}};
      for (const auto& x : p.at("x")) ps.x.push_back(number_from_json(x));
      for (const auto& y : p.at("y")) ps.y.push_back(number_from_json(y));
      r.plots.push_back(std::move(ps));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("report: ") + e.what());
  }
  return r;
}

RunReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path.string() + ": cannot open report");
  try {
    return report_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::vector<std::filesystem::path> emit(const RunReport& r, Format f, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("emit: cannot create directory " + dir.string());
  const std::string stem = sanitize(r.scenario) + "_" + sanitize(r.command);
  std::vector<std::filesystem::path> written;
  if (f == Format::Json) {
    const auto path = dir / (stem + ".json");
    write_atomic(path, to_json(r).dump(2) + "\n");
    written.push_back(path);
    return written;
  }
  if (f == Format::Csv) {
    for (const auto& t : r.tables) {
      std::string out;
      for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
      out += "\n";
      for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + fmt_num(row[i]);
        out += "\n";
      }
      const auto path = dir / (stem + "_" + sanitize(t.name) + ".csv");
      write_atomic(path, out);
      written.push_back(path);
    }
    return written;
  }
  for (const auto& p : r.plots) {
    std::string out = "# " + p.name + "\n";
    for (std::size_t i = 0; i < p.x.size() && i < p.y.size(); ++i) out += fmt_num(p.x[i]) + "  " + fmt_num(p.y[i]) + "\n";
    const auto path = dir / (stem + "_" + sanitize(p.name) + ".dat");
    write_atomic(path, out);
    written.push_back(path);
  }
  return written;
}

}  // namespace rankone
