#pragma once

#include "rankone/measure.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rankone {

// F(z) = int dmu(t) / (t - z). Evaluations off the real axis are memoised;
// copies share the cache, which is internally synchronised.
class HerglotzFunction {
 public:
  explicit HerglotzFunction(Measure mu);

  const Measure& measure() const { return mu_; }

  cplx operator()(cplx z) const;
  // F'(x) = int dmu(t) / (t - x)^2 for real x off the support.
  double derivative(double x) const;

 private:
  struct Cache;
  Measure mu_;
  std::shared_ptr<Cache> cache_;
};

// Closed forms for atoms, piecewise polynomial densities (constant,
// polynomial, table) and the full semicircle / arcsine laws; quadrature with
// the pole subtracted otherwise. DomainError for real z on the support.
cplx borel_transform(const Measure& mu, cplx z);
cplx borel_transform(const HerglotzFunction& F, cplx z);

enum class BoundaryMethod { ClosedForm, Extrapolated, Divergent };
std::string to_string(BoundaryMethod m);

struct BoundaryValue {
  cplx value;  // F(x + i0); meaningless when method == Divergent
  BoundaryMethod method = BoundaryMethod::ClosedForm;
  bool converged = true;
  double error_estimate = 0.0;
  // Fitted r in |F(x + i eps)| ~ eps^{-r} over the last two ladder rungs.
  double rate = 0.0;
  std::vector<std::pair<double, cplx>> ladder;
};

std::vector<double> default_eps_ladder();  // 1e-1, 1e-2, ..., 1e-6

// lim F(x + i eps) as eps -> 0+. Uses the closed form when every piece that
// contains x admits one; otherwise Richardson extrapolation down the ladder.
BoundaryValue boundary_value(const HerglotzFunction& F, double x,
                             std::span<const double> eps_ladder);
BoundaryValue boundary_value(const HerglotzFunction& F, double x);

// Closed-form F(x + i0) only; nullopt when some piece containing x needs
// the ladder, or when x sits on an atom or a non-cancelling jump.
std::optional<cplx> boundary_value_closed_form(const Measure& mu, double x);

// Operator between weighted sequence spaces L^2(in_weights) -> L^2(out_weights).
// `entries` act on function values: (A f)_k = sum_j entries(k, j) f_j, so an
// integral operator against mu carries the mu weights inside its entries.
class WeightedMatrix {
 public:
  WeightedMatrix() = default;
  WeightedMatrix(Eigen::MatrixXcd entries, Eigen::VectorXd in_weights,
                 Eigen::VectorXd out_weights);

  const Eigen::MatrixXcd& entries() const { return entries_; }
  const Eigen::VectorXd& in_weights() const { return in_weights_; }
  const Eigen::VectorXd& out_weights() const { return out_weights_; }
  Eigen::Index rows() const { return entries_.rows(); }
  Eigen::Index cols() const { return entries_.cols(); }

  Eigen::VectorXcd apply(const Eigen::VectorXcd& f) const;
  // Adjoint in the weighted inner products <f, g> = sum f conj(g) w.
  WeightedMatrix adjoint() const;
  // D_out^{1/2} A D_in^{-1/2}: same operator in orthonormal coordinates.
  Eigen::MatrixXcd orthonormal_form() const;

 private:
  Eigen::MatrixXcd entries_;
  Eigen::VectorXd in_weights_;
  Eigen::VectorXd out_weights_;
};

// T_eps f(s_k) = sum_j w_j f(t_j) / (s_k - t_j + i eps); mu = input, nu = output.
WeightedMatrix regularized_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double eps);
// Kernel 1/(s_k - t_j) where |s_k - t_j| > eps, else 0.
WeightedMatrix truncated_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double eps);
// eps = 0 kernel 1/(s_k - t_j); DomainError on a shared node.
WeightedMatrix cauchy_kernel_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

struct NormEstimate {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Largest singular value in the weighted norms by power iteration on A*A
// (all-ones start vector). The iterate is squared periodically when the
// Rayleigh quotients stall, which keeps clustered spectra tractable.
NormEstimate operator_norm(const WeightedMatrix& m, double tol = 1e-8, int max_iter = 20000);

// Product of the Poisson integrals of mu and nu at a (Im a > 0).
double poisson_a2(const Measure& mu, const Measure& nu, cplx a);

struct A2Report {
  double sup_value = 0.0;
  Interval witness;
  std::size_t candidates = 0;
  std::string grid_resolution;
};

// sup over candidates of mu(I) nu(I) / |I|^2.
A2Report interval_a2_sup(const Measure& mu, const Measure& nu,
                         std::span<const Interval> candidate_intervals);

// Dyadic intervals over the joint hull down to `dyadic_depth`, intervals
// [c - h, c + h] around every atom with h halving `shrink_levels` times, and
// intervals spanning up to 8 consecutive atoms of the joint support.
std::vector<Interval> a2_candidates(const Measure& mu, const Measure& nu,
                                    int dyadic_depth = 12, int shrink_levels = 40);

struct AtomFamilyScan {
  double center = 0.0;
  std::vector<std::pair<double, double>> values;  // (half width h, mu(I) nu(I)/|I|^2)
  // Ratio of the last two values; ~4 is the 1/h^2 signature of a shared atom.
  double growth_per_halving = 0.0;
  bool divergent = false;
};

AtomFamilyScan atom_centered_scan(const Measure& mu, const Measure& nu, double center,
                                  double h0, int levels);

struct LevelsetTail {
  std::vector<double> t;
  std::vector<double> measure;   // |{x in I : |K eta(x)| > t}|
  std::vector<double> product;   // t * measure
  double slope = 0.0;            // d log(product) / d log t over the upper half of the grid
  std::size_t grid_points = 0;
  std::vector<double> excluded;  // grid points dropped because they sit on an atom
};

// Superlevel sets of |F(x + i0)| on a midpoint grid over I.
LevelsetTail levelset_tail(const Measure& eta, const Interval& I, std::span<const double> t_grid,
                           std::size_t grid_points = 100000);

}  // namespace rankone
