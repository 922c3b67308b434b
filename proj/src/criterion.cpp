#include "rankone/criterion.hpp"

#include "rankone/errors.hpp"
#include "rankone/measure_json.hpp"
#include "rankone/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>

namespace rankone {

namespace {

constexpr int kShells = 12;
constexpr double kInf = std::numeric_limits<double>::infinity();

DivergenceVerdict analytic(Divergence d, std::string reason, double exponent = 0.0) {
  DivergenceVerdict v;
  v.verdict = d;
  v.method = VerdictMethod::Analytic;
  v.reason = std::move(reason);
  v.fitted_exponent = exponent;
  return v;
}

// Closed-form classification shared by both tests; nullopt for families that
// need the numeric fit. `rearr` selects the wording of the reason.
std::optional<DivergenceVerdict> classify(const AcPiece& piece, const Interval& I, bool rearr) {
  const double a = piece.interval.lo;
  const bool touches_left = I.lo <= a;
  if (const auto* c = std::get_if<weight::Constant>(&piece.weight)) {
    if (c->c > 0.0) return analytic(Divergence::Diverges, "constant weight, bounded below", 0.0);
    return analytic(Divergence::Converges, "w = 0 on I", 0.0);
  }
  if (const auto* pl = std::get_if<weight::PowerLaw>(&piece.weight)) {
    if (pl->c == 0.0) return analytic(Divergence::Converges, "w = 0 on I", 0.0);
    if (pl->p <= 0.0 || !touches_left)
      return analytic(Divergence::Diverges, "power law bounded below on I", 0.0);
    const double p = pl->p;
    if (rearr)
      return analytic(p <= 1.0 ? Divergence::Diverges : Divergence::Converges,
                      "w*(x) ~ c x^p with p = " + std::to_string(p) + "; diverges iff p <= 1", p);
    return analytic(p <= 1.0 ? Divergence::Diverges : Divergence::Converges,
                    "D_w(y) ~ (y/c)^{1/p} with p = " + std::to_string(p) + "; diverges iff 1/p >= 1", 1.0 / p);
  }
  if (const auto* lg = std::get_if<weight::PowerLog>(&piece.weight)) {
    if (lg->c == 0.0) return analytic(Divergence::Converges, "w = 0 on I", 0.0);
    if (!touches_left) return analytic(Divergence::Diverges, "power-log weight bounded below on I", 1.0);
    const double p = lg->p;
    const std::string form = rearr ? "w*(x) ~ c x ln^{-p}(1/x)" : "D_w(y) ~ (y/c) ln^{p}(1/y)";
    return analytic(p <= 1.0 ? Divergence::Diverges : Divergence::Converges,
                    form + " with p = " + std::to_string(p) + "; diverges iff p <= 1", 1.0);
  }
  if (std::holds_alternative<weight::Semicircle>(piece.weight))
    return analytic(Divergence::Diverges, "semicircle: square-root zeros at most", 0.5);
  if (std::holds_alternative<weight::Arcsine>(piece.weight))
    return analytic(Divergence::Diverges, "arcsine weight bounded below", 0.0);
  return std::nullopt;
}

void check_sub(const AcPiece& piece, const Interval& I) {
  if (!(I.length() > 0.0)) throw DomainError("criterion: degenerate interval");
  if (I.lo < piece.interval.lo || I.hi > piece.interval.hi)
    throw DomainError("criterion: interval is not contained in the piece");
}

double uncovered_length(const Measure& mu, const Interval& I) {
  std::vector<Interval> ivs;
  for (const auto& p : mu.pieces()) ivs.push_back(p.interval);
  std::sort(ivs.begin(), ivs.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  double cursor = I.lo, gap = 0.0;
  for (const auto& iv : ivs) {
    if (iv.hi <= cursor) continue;
    if (iv.lo >= I.hi) break;
    if (iv.lo > cursor) gap += iv.lo - cursor;
    cursor = std::max(cursor, iv.hi);
  }
  if (cursor < I.hi) gap += I.hi - cursor;
  return gap;
}

// Shell contributions int_{lo}^{hi} g over [top 2^{-k-1}, top 2^{-k}] in log
// coordinates, then the geometric-ratio fit and the verdict.
DivergenceVerdict shell_fit(const std::function<double(double)>& integrand_times_x, double top,
                            bool rearrangement) {
  DivergenceVerdict v;
  v.method = VerdictMethod::NumericFit;
  const GaussRule rule = gauss_legendre(16, 0.0, 1.0);
  for (int k = 0; k < kShells; ++k) {
    const double lo = std::log(top) - (k + 1) * std::log(2.0);
    const double hi = std::log(top) - k * std::log(2.0);
    double c = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double s = lo + (hi - lo) * rule.nodes[i];
      c += rule.weights[i] * (hi - lo) * integrand_times_x(std::exp(s));
    }
    v.ladder.push_back(c);
    if (!std::isfinite(c)) {
      v.verdict = Divergence::Diverges;
      v.reason = rearrangement ? "shell contribution infinite" : "D_w vanishes near 0 (w bounded below on I)";
      v.floor = kInf;
      v.fitted_ratio = kInf;
      return v;
    }
  }
  v.floor = *std::min_element(v.ladder.begin(), v.ladder.end());
  const auto tail_zero = std::all_of(v.ladder.begin() + kShells / 2, v.ladder.end(), [](double c) { return c == 0.0; });
  if (tail_zero) {
    v.verdict = Divergence::Converges;
    v.reason = "shell contributions vanish (w = 0 on a set of positive measure)";
    return v;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int k = 0; k < kShells; ++k) {
    if (!(v.ladder[k] > 0.0)) continue;
    sx += k;
    sy += std::log(v.ladder[k]);
    sxx += double(k) * k;
    sxy += k * std::log(v.ladder[k]);
    ++n;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  v.fitted_ratio = std::exp(slope);
  v.fitted_exponent = 1.0 - std::log2(v.fitted_ratio);
  if (v.fitted_ratio < 0.9) {
    v.verdict = Divergence::Converges;
    v.reason = "shell contributions decay geometrically";
  } else if (v.fitted_ratio >= 0.98 && v.floor > 0.0) {
    v.verdict = Divergence::Diverges;
    v.reason = "shell contributions bounded below by a positive constant";
  } else {
    v.verdict = Divergence::Inconclusive;
    v.reason = "shell trend ambiguous";
  }
  return v;
}

DivergenceVerdict rearrangement_fit(const std::function<double(double)>& wstar, double length) {
  return shell_fit([&](double x) { return wstar(x) / x; }, 0.5 * length, true);
}

DivergenceVerdict distribution_fit(const std::function<double(double)>& D, double delta) {
  return shell_fit(
      [&](double y) {
        const double d = D(y);
        return d > 0.0 ? y / d : kInf;
      },
      delta, false);
}

const AcPiece* single_cover(const Measure& mu, const Interval& I) {
  const AcPiece* found = nullptr;
  for (const auto& p : mu.pieces()) {
    const double overlap = std::min(I.hi, p.interval.hi) - std::max(I.lo, p.interval.lo);
    if (overlap <= 0.0) continue;
    if (found) return nullptr;
    found = &p;
  }
  if (found && found->interval.lo <= I.lo && found->interval.hi >= I.hi) return found;
  return nullptr;
}

}  // namespace

std::string to_string(Divergence d) {
  switch (d) {
    case Divergence::Diverges: return "Diverges";
    case Divergence::Converges: return "Converges";
    case Divergence::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

std::string to_string(VerdictMethod m) { return m == VerdictMethod::Analytic ? "Analytic" : "NumericFit"; }

std::string to_string(SpectrumVerdict v) {
  return v == SpectrumVerdict::NoSingularSpectrumOnI ? "NoSingularSpectrumOnI" : "Inconclusive";
}

DivergenceVerdict rearrangement_test(const AcPiece& w, const Interval& I) {
  check_sub(w, I);
  if (auto v = classify(w, I, true)) return *v;
  return rearrangement_fit([&](double x) { return increasing_rearrangement(w, I, x); }, I.length());
}

DivergenceVerdict rearrangement_test(const AcPiece& w) { return rearrangement_test(w, w.interval); }

DivergenceVerdict rearrangement_test(const Measure& mu, const Interval& I) {
  if (!(I.length() > 0.0)) throw DomainError("criterion: degenerate interval");
  if (uncovered_length(mu, I) > 0.0)
    return analytic(Divergence::Converges, "w = 0 on a subset of I of positive length", 0.0);
  if (const AcPiece* p = single_cover(mu, I)) return rearrangement_test(*p, I);
  return rearrangement_fit([&](double x) { return increasing_rearrangement(mu, I, x); }, I.length());
}

DivergenceVerdict distribution_test(const AcPiece& w, const Interval& I) {
  check_sub(w, I);
  if (auto v = classify(w, I, false)) return *v;
  const double delta = increasing_rearrangement(w, I, 0.5 * I.length());
  if (!(delta > 0.0)) return analytic(Divergence::Converges, "w = 0 on half of I", 0.0);
  return distribution_fit([&](double y) { return distribution_function(w, I, y); }, delta);
}

DivergenceVerdict distribution_test(const AcPiece& w) { return distribution_test(w, w.interval); }

DivergenceVerdict distribution_test(const Measure& mu, const Interval& I) {
  if (!(I.length() > 0.0)) throw DomainError("criterion: degenerate interval");
  if (uncovered_length(mu, I) > 0.0)
    return analytic(Divergence::Converges, "w = 0 on a subset of I of positive length", 0.0);
  if (const AcPiece* p = single_cover(mu, I)) return distribution_test(*p, I);
  const double delta = increasing_rearrangement(mu, I, 0.5 * I.length());
  if (!(delta > 0.0)) return analytic(Divergence::Converges, "w = 0 on half of I", 0.0);
  return distribution_fit([&](double y) { return distribution_function(mu, I, y); }, delta);
}

EquivalenceAudit equivalence_audit(const AcPiece& w) {
  EquivalenceAudit a;
  a.rearrangement = rearrangement_test(w);
  a.distribution = distribution_test(w);
  a.agree = a.rearrangement.verdict != Divergence::Inconclusive && a.rearrangement.verdict == a.distribution.verdict;
  return a;
}

EquivalenceAudit equivalence_audit(const Measure& mu, const Interval& I) {
  EquivalenceAudit a;
  a.rearrangement = rearrangement_test(mu, I);
  a.distribution = distribution_test(mu, I);
  a.agree = a.rearrangement.verdict != Divergence::Inconclusive && a.rearrangement.verdict == a.distribution.verdict;
  return a;
}

namespace {

OLittleResult olittle_from(const std::function<double(double)>& D, std::span<const double> t_grid) {
  if (t_grid.empty()) throw DomainError("olittle_test: t grid is empty");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > 0.0)) throw DomainError("olittle_test: t grid must be positive");
    if (i > 0 && !(t_grid[i] > t_grid[i - 1])) throw DomainError("olittle_test: t grid must be increasing");
  }
  OLittleResult r;
  for (double t : t_grid) {
    r.t.push_back(t);
    r.product.push_back(t * D(1.0 / t));
  }
  const std::size_t start = r.t.size() / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  bool all_zero = true;
  for (std::size_t i = start; i < r.t.size(); ++i) {
    if (!(r.product[i] > 0.0)) continue;
    all_zero = false;
    const double lx = std::log(r.t[i]);
    const double ly = std::log(r.product[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (all_zero) {
    r.slope = -kInf;
    r.olittle = true;
    return r;
  }
  if (n >= 2 && n * sxx - sx * sx > 0.0) r.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  // A product that hits zero inside the tail also decays faster than any power.
  const bool hits_zero = r.product.back() == 0.0;
  r.olittle = r.slope < -0.1 || hits_zero;
  return r;
}

}  // namespace

OLittleResult olittle_test(const AcPiece& w, std::span<const double> t_grid) {
  return olittle_from([&](double y) { return distribution_function(w, y); }, t_grid);
}

OLittleResult olittle_test(const Measure& mu, const Interval& I, std::span<const double> t_grid) {
  return olittle_from([&](double y) { return distribution_function(mu, I, y); }, t_grid);
}

std::vector<double> default_t_grid() {
  std::vector<double> t;
  for (int i = 0; i <= 28; ++i) t.push_back(std::pow(10.0, 1.0 + i / 4.0));
  return t;
}

EProbe e_probe(const Measure& sigma, double alpha) {
  EProbe e;
  double total = 0.0;
  for (const auto& a : sigma.atoms()) {
    if (a.position == alpha) {
      e.value = kInf;
      return e;
    }
    total += a.mass / ((alpha - a.position) * (alpha - a.position));
  }
  for (const auto& p : sigma.pieces()) {
    const double lo = p.interval.lo, hi = p.interval.hi;
    if (p.interval.contains(alpha)) {
      e.value = kInf;
      return e;
    }
    if (const auto* c = std::get_if<weight::Constant>(&p.weight)) {
      total += c->c * (1.0 / (alpha - hi) - 1.0 / (alpha - lo));
      continue;
    }
    total += integrate(p, [alpha](double b) { return cplx(1.0 / ((alpha - b) * (alpha - b))); }).value.real();
  }
  e.finite = std::isfinite(total);
  e.value = e.finite ? total : kInf;
  return e;
}

AveragedSetup averaged_setup(const Measure& mu, const Measure& sigma, const PerturbationEngine& engine,
                             int beta_nodes_per_piece) {
  if (sigma.empty()) throw DomainError("averaged_setup: sigma is zero");
  if (beta_nodes_per_piece < 1) throw DomainError("averaged_setup: need at least one beta node per piece");
  AveragedSetup s;
  s.sigma = sigma;
  const DiscreteMeasure betas = discretize(sigma, beta_nodes_per_piece);
  std::map<double, double> atom_mass;
  // Pieces grouped by interval; each holds (weight, piece) contributions.
  std::map<std::pair<double, double>, std::vector<std::pair<double, AcPiece>>> groups;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    const double beta = betas.nodes()[i];
    const double sw = betas.weights()[i];
    s.beta_nodes.emplace_back(beta, sw);
    const PerturbationResult r = engine(mu, beta);
    for (const auto& a : r.perturbed.atoms()) atom_mass[a.position] += sw * a.mass;
    for (const auto& p : r.perturbed.pieces()) groups[{p.interval.lo, p.interval.hi}].emplace_back(sw, p);
  }
  std::vector<Atom> atoms;
  for (const auto& [x, m] : atom_mass) atoms.push_back({x, m});
  std::vector<AcPiece> pieces;
  for (const auto& [key, parts] : groups) {
    std::vector<double> xs;
    for (const auto& [sw, p] : parts) {
      if (const auto* t = std::get_if<weight::Table>(&p.weight)) {
        xs.insert(xs.end(), t->x.begin(), t->x.end());
      } else {
        for (int k = 0; k <= 1024; ++k) xs.push_back(key.first + (key.second - key.first) * k / 1024.0);
      }
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::vector<double> ys(xs.size(), 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (const auto& [sw, p] : parts) {
        const double v = p(xs[i]);
        if (std::isfinite(v)) ys[i] += sw * v;
      }
    pieces.push_back(make_piece(Interval(key.first, key.second), weight::Table{xs, ys}));
  }
  s.tau = Measure(std::move(atoms), std::move(pieces));
  s.tau_mass = s.tau.total_mass();
  s.expected_mass = sigma.total_mass() * mu.total_mass();
  return s;
}

VerdictResult verdict(const Measure& mu, const Interval& I, double alpha) {
  if (alpha == 0.0) throw DomainError("verdict: precondition violated: alpha != 0");
  VerdictResult r;
  const bool meets = std::any_of(mu.pieces().begin(), mu.pieces().end(), [&](const AcPiece& p) {
    return std::min(I.hi, p.interval.hi) - std::max(I.lo, p.interval.lo) > 0.0;
  });
  if (!meets) {
    r.reason = "I intersects no a.c. piece";
    return r;
  }
  r.test = distribution_test(mu, I);
  if (r.test.verdict == Divergence::Diverges) {
    r.verdict = SpectrumVerdict::NoSingularSpectrumOnI;
    r.reason = "int_0 dy / D_w(y) diverges on I";
  } else {
    r.reason = "criterion not met (" + to_string(r.test.verdict) + "); no conclusion";
  }
  return r;
}

VerdictResult verdict(const Measure& mu, const Interval& I, double alpha, const AveragedSetup& setup) {
  if (alpha == 0.0) throw DomainError("verdict: precondition violated: alpha != 0");
  const EProbe e = setup.E(alpha);
  if (!e.finite) {
    VerdictResult r;
    r.reason = "alpha not in E (int dsigma/(alpha-beta)^2 = inf)";
    return r;
  }
  return verdict(mu, I, alpha);
}

nlohmann::json to_json(const DivergenceVerdict& v) {
  nlohmann::json ladder = nlohmann::json::array();
  for (double c : v.ladder) ladder.push_back(json_number(c));
  return {{"verdict", to_string(v.verdict)},
          {"method", to_string(v.method)},
          {"reason", v.reason},
          {"ladder", ladder},
          {"fitted_ratio", json_number(v.fitted_ratio)},
          {"fitted_exponent", json_number(v.fitted_exponent)},
          {"floor", json_number(v.floor)}};
}

nlohmann::json to_json(const EquivalenceAudit& a) {
  return {{"rearrangement", to_json(a.rearrangement)}, {"distribution", to_json(a.distribution)}, {"agree", a.agree}};
}

nlohmann::json to_json(const OLittleResult& r) {
  nlohmann::json product = nlohmann::json::array();
  for (double p : r.product) product.push_back(json_number(p));
  return {{"olittle", r.olittle}, {"t", r.t}, {"product", product}, {"slope", json_number(r.slope)}};
}

nlohmann::json to_json(const VerdictResult& v) {
  return {{"verdict", to_string(v.verdict)}, {"reason", v.reason}, {"test", to_json(v.test)}};
}

}  // namespace rankone
