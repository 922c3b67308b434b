#pragma once

#include <complex>
#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace rankone {

using cplx = std::complex<double>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval() = default;
  Interval(double a, double b);

  double length() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
  bool contains_interior(double x) const { return lo < x && x < hi; }
};

// Density families an absolutely continuous piece can carry. Positions are
// absolute unless noted; PowerLaw and PowerLog are written in the offset
// u = x - a from the left end a of the piece they sit on.
namespace weight {
struct Constant {
  double c = 1.0;
};
// sum_k coefficients[k] x^k
struct Polynomial {
  std::vector<double> coefficients;
};
// c u^p
struct PowerLaw {
  double c = 1.0;
  double p = 0.0;
};
// c u ln^{-p}(1/u); requires pieces shorter than 1 so that ln(1/u) > 0.
struct PowerLog {
  double c = 1.0;
  double p = 0.0;
};
// scale * sqrt(4 - x^2) / (2 pi), support inside [-2, 2]
struct Semicircle {
  double scale = 1.0;
};
// scale / (pi sqrt(1 - x^2)), support inside [-1, 1]
struct Arcsine {
  double scale = 1.0;
};
// Linear interpolation through (x[i], y[i]); x strictly increasing.
struct Table {
  std::vector<double> x;
  std::vector<double> y;
};
}  // namespace weight

using WeightDescriptor =
    std::variant<weight::Constant, weight::Polynomial, weight::PowerLaw,
                 weight::PowerLog, weight::Semicircle, weight::Arcsine,
                 weight::Table>;

std::string kind_name(const WeightDescriptor& w);

struct AcPiece {
  Interval interval;
  WeightDescriptor weight;

  // Density at x; 0 outside the interval.
  double operator()(double x) const;

  // Density has an integrable blow-up at an endpoint (or unbounded
  // derivative there), so tanh-sinh is the right integrator.
  bool endpoint_singular() const;
};

// Validates the piece (interval, family parameters, nonnegativity on a probe
// grid) and returns it. Throws ValidationError naming the failed invariant.
AcPiece make_piece(Interval interval, WeightDescriptor weight);

struct Atom {
  double position = 0.0;
  double mass = 0.0;
};

// Finite Borel measure on R: finitely many atoms plus absolutely continuous
// pieces. Immutable after construction; atoms are kept sorted.
class Measure {
 public:
  Measure() = default;
  Measure(std::vector<Atom> atoms, std::vector<AcPiece> pieces);

  static Measure dirac(double position, double mass = 1.0);
  static Measure lebesgue(double a, double b, double density = 1.0);
  static Measure semicircle(double scale = 1.0);

  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<AcPiece>& pieces() const { return pieces_; }

  bool empty() const { return atoms_.empty() && pieces_.empty(); }
  double total_mass() const;
  double atomic_mass() const;
  // mu(I) for the closed interval I.
  double mass_of(const Interval& closed) const;
  // Sum of the a.c. densities at x.
  double density(double x) const;
  // Smallest closed interval containing the support.
  Interval hull() const;

  Measure scaled(double factor) const;
  Measure operator+(const Measure& other) const;

 private:
  std::vector<Atom> atoms_;
  std::vector<AcPiece> pieces_;
};

struct Integral {
  cplx value;
  double error = 0.0;
};

// Integral of f against a single a.c. piece. DomainError for a PowerLaw
// with p <= -1 (not integrable at the left end).
Integral integrate(const AcPiece& piece, const std::function<cplx(double)>& f);
Integral integrate(const Measure& mu, const std::function<cplx(double)>& f);
Integral integrate_real(const Measure& mu, const std::function<double(double)>& f);

// Integral of (1 + |t|)^{-1}.
double h_minus_one_check(const Measure& mu);

double moment(const Measure& mu, int k);

// Finite node/weight list, nodes strictly increasing, weights positive.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  DiscreteMeasure(std::vector<double> nodes, std::vector<double> weights,
                  double mass_error = 0.0);

  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return nodes_.size(); }
  double total_mass() const;
  // |sum of weights - mass of the measure it was built from|.
  double mass_error() const { return mass_error_; }

  Measure to_measure() const;

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
  double mass_error_ = 0.0;
};

// Atoms pass through; each a.c. piece contributes a Gauss-Legendre rule with
// weights (rule weight) * w(node). Coincident nodes are separated by a few
// ulps with a logged warning.
DiscreteMeasure discretize(const Measure& mu, int nodes_per_piece);

// D(t) = |{x in sub : w(x) < t}| for the density of `piece` restricted to
// `sub` (which must lie inside the piece).
double distribution_function(const AcPiece& piece, const Interval& sub, double t);
double distribution_function(const AcPiece& piece, double t);
// Same for the total a.c. density of mu on I (zero where no piece covers).
double distribution_function(const Measure& mu, const Interval& I, double t);

// w*(x) = inf{t : D(t) > x}, 0 < x < |sub|.
double increasing_rearrangement(const AcPiece& piece, const Interval& sub, double x);
double increasing_rearrangement(const AcPiece& piece, double x);
double increasing_rearrangement(const Measure& mu, const Interval& I, double x);

// True iff no atom of mu lies within tol of an atom of nu.
bool atomic_parts_disjoint(const Measure& mu, const Measure& nu, double tol);

}  // namespace rankone
