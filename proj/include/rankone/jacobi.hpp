#pragma once

#include "rankone/measure.hpp"

#include <json.hpp>

#include <optional>
#include <vector>

namespace rankone {

// a: off-diagonal (size N - 1, positive); b: diagonal (size N).
struct JacobiParams {
  std::vector<double> a;
  std::vector<double> b;

  std::size_t size() const { return b.size(); }
  void validate() const;
};

struct JacobiFromMeasure {
  JacobiParams params;
  // 1-based n with a_n below tolerance; params then hold b_1..b_n, a_1..a_{n-1}.
  std::optional<int> breakdown;
};

// Stieltjes procedure (Lanczos on diag(nodes) against sqrt(weights), full
// reorthogonalization) on a discretization of mu with max(4N, 2000) nodes per
// a.c. piece. mu must have mass 1.
JacobiFromMeasure jacobi_from_measure(const Measure& mu, int n);
JacobiFromMeasure jacobi_from_measure(const DiscreteMeasure& mu, int n);

// Eigenvalues with squared first eigenvector components.
DiscreteMeasure measure_from_jacobi(const JacobiParams& j);

JacobiParams perturb_b1(const JacobiParams& j, double alpha);
double hilbert_schmidt_defect(const JacobiParams& j);
JacobiParams free_jacobi(int n);

struct KillipSimonReport {
  bool blumenthal_weyl = false;
  std::string blumenthal_weyl_detail;
  std::vector<double> lambda_plus;   // eigenvalues above 2, decreasing toward 2
  std::vector<double> lambda_minus;  // eigenvalues below -2, increasing toward -2
  double lieb_thirring = 0.0;
  bool lieb_thirring_finite = true;
  double quasi_szego = 0.0;  // may be -inf
  bool quasi_szego_finite = false;
  double mass = 0.0;
  bool normalization = false;
  bool verdict = false;
};

KillipSimonReport killip_simon_check(const Measure& mu, double mass_tol = 1e-10);

// Semicircle density times |t - center| ln^{-p}(1/|t - center|) near center,
// sampled into a table on [-2, 2] and normalized to mass 1.
Measure killip_simon_family(double p, double center = 0.0, int samples = 4001);

nlohmann::json to_json(const JacobiParams& j);
JacobiParams jacobi_from_json(const nlohmann::json& j);
nlohmann::json to_json(const KillipSimonReport& r);

}  // namespace rankone
