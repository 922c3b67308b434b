#pragma once

#include "rankone/measure.hpp"
#include "rankone/rank_one.hpp"

#include <json.hpp>

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace rankone {

enum class Divergence { Diverges, Converges, Inconclusive };
enum class VerdictMethod { Analytic, NumericFit };

std::string to_string(Divergence d);
std::string to_string(VerdictMethod m);

struct DivergenceVerdict {
  Divergence verdict = Divergence::Inconclusive;
  VerdictMethod method = VerdictMethod::NumericFit;
  std::string reason;
  // NumericFit: contributions of the dyadic shells, outermost first.
  std::vector<double> ladder;
  double fitted_ratio = 0.0;     // geometric ratio of successive shells
  double fitted_exponent = 0.0;  // local exponent of w* (rearrangement) or D (distribution) near 0
  double floor = 0.0;            // smallest shell contribution
};

// int_0^eps x^{-2} w*(x) dx = infinity ?  w is the density of the piece on I
// (I defaults to the piece interval).
DivergenceVerdict rearrangement_test(const AcPiece& w);
DivergenceVerdict rearrangement_test(const AcPiece& w, const Interval& I);
DivergenceVerdict rearrangement_test(const Measure& mu, const Interval& I);

// int_0^delta dy / D_w(y) = infinity ?
DivergenceVerdict distribution_test(const AcPiece& w);
DivergenceVerdict distribution_test(const AcPiece& w, const Interval& I);
DivergenceVerdict distribution_test(const Measure& mu, const Interval& I);

struct EquivalenceAudit {
  DivergenceVerdict rearrangement;
  DivergenceVerdict distribution;
  bool agree = false;  // both decided and equal
};

EquivalenceAudit equivalence_audit(const AcPiece& w);
EquivalenceAudit equivalence_audit(const Measure& mu, const Interval& I);

struct OLittleResult {
  bool olittle = false;  // t |{1/w > t}| -> 0
  std::vector<double> t;
  std::vector<double> product;
  double slope = 0.0;
};

// t |{x in I : 1/w(x) > t}| along an increasing t grid; o(1/t) iff the fitted
// log-log slope over the upper half is below -0.1 or the product vanishes there.
OLittleResult olittle_test(const AcPiece& w, std::span<const double> t_grid);
OLittleResult olittle_test(const Measure& mu, const Interval& I, std::span<const double> t_grid);
std::vector<double> default_t_grid();  // 10^1 ... 10^8, 4 points per decade

struct EProbe {
  bool finite = false;
  double value = 0.0;  // +inf when not finite
};

// int dsigma(beta) / (alpha - beta)^2
EProbe e_probe(const Measure& sigma, double alpha);

struct AveragedSetup {
  Measure sigma;
  Measure tau;
  std::vector<std::pair<double, double>> beta_nodes;  // (beta, sigma weight)
  double tau_mass = 0.0;
  double expected_mass = 0.0;  // mass(sigma) mass(mu)

  EProbe E(double alpha) const { return e_probe(sigma, alpha); }
};

using PerturbationEngine = std::function<PerturbationResult(const Measure&, double)>;

// tau = sum_i sigma_i perturb(mu, beta_i) over the atoms of sigma and a
// Gauss-Legendre rule (beta_nodes_per_piece points) on each of its pieces.
AveragedSetup averaged_setup(const Measure& mu, const Measure& sigma, const PerturbationEngine& engine = perturb,
                             int beta_nodes_per_piece = 16);

enum class SpectrumVerdict { NoSingularSpectrumOnI, Inconclusive };
std::string to_string(SpectrumVerdict v);

struct VerdictResult {
  SpectrumVerdict verdict = SpectrumVerdict::Inconclusive;
  std::string reason;
  DivergenceVerdict test;
};

// DomainError for alpha == 0.
VerdictResult verdict(const Measure& mu, const Interval& I, double alpha);
// Same, but Inconclusive unless alpha lies in E = {alpha : int dsigma/(alpha-beta)^2 < inf}.
VerdictResult verdict(const Measure& mu, const Interval& I, double alpha, const AveragedSetup& setup);

nlohmann::json to_json(const DivergenceVerdict& v);
nlohmann::json to_json(const EquivalenceAudit& a);
nlohmann::json to_json(const OLittleResult& r);
nlohmann::json to_json(const VerdictResult& v);

}  // namespace rankone
