#pragma once

#include "rankone/cauchy.hpp"
#include "rankone/measure.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace rankone {

// F_alpha = F / (1 + alpha F).
cplx aronszajn_krein(const HerglotzFunction& F, double alpha, cplx z);

struct SecularRoot {
  double root = 0.0;
  double derivative = 0.0;  // F'(root)
};

struct SecularRoots {
  std::vector<SecularRoot> roots;  // ascending
  std::vector<std::string> excluded;
};

// Real solutions of 1 + alpha F(x) = 0 in the gaps of supp mu and outside its
// hull. Bracketing bisection in coordinates relative to the nearest atom or
// edge, then Newton polishing.
SecularRoots secular_roots(const Measure& mu, double alpha);

struct DensityValue {
  double value = 0.0;          // w_alpha(x)
  double bound_product = 0.0;  // pi^2 alpha^2 w(x) w_alpha(x); <= 1
  bool bound_ok = true;
};

// w(x) / |1 + alpha F(x + i0)|^2 at an interior point of the a.c. support.
DensityValue perturbed_ac_density(const Measure& mu, double alpha, double x);

struct PerturbedAtom {
  double root = 0.0;
  double derivative = 0.0;
  double mass = 0.0;
  double residual = 0.0;  // |1 + alpha F(root)|
};

struct PerturbationResult {
  double alpha = 0.0;
  Measure base;
  Measure perturbed;
  std::vector<PerturbedAtom> atoms;
  std::vector<std::string> excluded;
  double mass_defect = 0.0;
  double max_root_residual = 0.0;
  double max_bound_product = 0.0;
  int bound_violations = 0;
  std::size_t density_samples = 0;
};

PerturbationResult perturb(const Measure& mu, double alpha);

struct DirectPerturbation {
  DiscreteMeasure perturbed;
  Eigen::MatrixXd eigenvectors;  // columns, orthonormal, ordered as the eigenvalues
};

// Full eigendecomposition of diag(t) + alpha sqrt(w) sqrt(w)^T.
DirectPerturbation direct_discrete_perturbation(const DiscreteMeasure& mu, double alpha);

struct RepresentationMatrix {
  WeightedMatrix matrix;  // L^2(mu) -> L^2(perturbed)
  double alpha = 0.0;
  // max_k |1 - alpha sum_j w_j / (s_k - t_j)|; zero for a spectral pair.
  double secular_residual = 0.0;
};

// Entries alpha w_j / (s_k - t_j).
RepresentationMatrix representation_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& perturbed,
                                           double alpha);

// General form f(s) - alpha sum_j w_j (f(s) - f(t_j)) / (s - t_j) at each node of nu.
Eigen::VectorXd apply_representation(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double alpha,
                                     const std::function<double(double)>& f);

struct UnitarityDefect {
  double left = 0.0;   // ||V*V - I||
  double right = 0.0;  // ||VV* - I||
};

UnitarityDefect unitarity_defect(const WeightedMatrix& v);
UnitarityDefect unitarity_defect(const RepresentationMatrix& v);

struct RigidityResult {
  Eigen::VectorXd h;
  double offdiag_residual = 0.0;
  UnitarityDefect normalized_defect;  // of M_h V
};

// psi = diag(VV*), h = psi^{-1/2}. DomainError when VV* is not diagonal to
// within offdiag_tol (relative to max psi) or some psi_k <= psi_tol.
RigidityResult rigidity_normalizer(const WeightedMatrix& v, double offdiag_tol = 1e-8, double psi_tol = 1e-12);

struct TEpsOneRow {
  double s = 0.0;
  std::vector<std::pair<double, cplx>> ladder;  // (eps, T_eps 1 (s))
  double target = 0.0;                          // 1 / alpha
  double residual = 0.0;                        // |last value - 1/alpha|
  double rate = 0.0;                            // log-log slope of the residual over the last two rungs
};

std::vector<TEpsOneRow> t_eps_one_limit(const DiscreteMeasure& mu, const DiscreteMeasure& perturbed,
                                        double alpha, std::span<const double> eps_ladder);

// V f = f(s) (1 - alpha T1(s)) + alpha T f(s) with T the eps = 0 kernel.
Eigen::VectorXd tweak_reconstruction(const DiscreteMeasure& mu, const DiscreteMeasure& perturbed, double alpha,
                                     const std::function<double(double)>& f);

nlohmann::json to_json(const PerturbationResult& r);

}  // namespace rankone
