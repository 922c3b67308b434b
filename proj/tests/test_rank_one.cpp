#include "rankone/errors.hpp"
#include "rankone/rank_one.hpp"
#include "rankone/tridiagonal.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace rankone;
using doctest::Approx;

namespace {

const double kSqrt5 = std::sqrt(5.0);

DiscreteMeasure two_atoms() { return DiscreteMeasure({-1.0, 1.0}, {0.5, 0.5}); }

DiscreteMeasure atoms_of(const Measure& m) {
  std::vector<double> s, v;
  for (const auto& a : m.atoms()) {
    s.push_back(a.position);
    v.push_back(a.mass);
  }
  return DiscreteMeasure(s, v);
}

}  // namespace

TEST_CASE("aronszajn-krein closed forms") {
  const HerglotzFunction delta(Measure::dirac(0.0));
  CHECK(std::abs(aronszajn_krein(delta, 1.0, cplx(0, 1)) - cplx(0.5, 0.5)) <= 1e-15);
  const HerglotzFunction two(two_atoms().to_measure());
  CHECK(std::abs(aronszajn_krein(two, 1.0, cplx(0, 1)) - cplx(0.2, 0.4)) <= 1e-15);
}

TEST_CASE("two atom perturbation") {
  const PerturbationResult r = perturb(two_atoms().to_measure(), 1.0);
  REQUIRE(r.atoms.size() == 2);
  CHECK(r.atoms[0].root == Approx((1.0 - kSqrt5) / 2.0).epsilon(1e-14));
  CHECK(r.atoms[1].root == Approx((1.0 + kSqrt5) / 2.0).epsilon(1e-14));
  CHECK(r.atoms[0].mass == Approx((5.0 - kSqrt5) / 10.0).epsilon(1e-14));
  CHECK(r.atoms[1].mass == Approx((5.0 + kSqrt5) / 10.0).epsilon(1e-14));
  CHECK(r.mass_defect <= 1e-14);
}

TEST_CASE("direct oracle on the two atom model") {
  const DirectPerturbation d = direct_discrete_perturbation(two_atoms(), 1.0);
  CHECK(d.perturbed.nodes()[0] == Approx((1.0 - kSqrt5) / 2.0));
  CHECK(d.perturbed.weights()[1] == Approx(0.72360679774997897));
}

TEST_CASE("roots interlace for different couplings") {
  const Measure mu = two_atoms().to_measure();
  const auto r1 = secular_roots(mu, 1.0).roots;
  const auto r2 = secular_roots(mu, 2.0).roots;
  REQUIRE(r1.size() == 2);
  REQUIRE(r2.size() == 2);
  CHECK(r1[0].root < r2[0].root);
  CHECK(r1[1].root < r2[1].root);
}

TEST_CASE("perturbed density of Lebesgue at the centre") {
  const Measure leb = Measure::lebesgue(-1.0, 1.0);
  for (double alpha : {1.0, 0.5, -2.0}) {
    const DensityValue v = perturbed_ac_density(leb, alpha, 0.0);
    const double expected = 1.0 / (1.0 + alpha * alpha * std::numbers::pi * std::numbers::pi);
    CHECK(v.value == Approx(expected).epsilon(1e-10));
    CHECK(v.bound_ok);
  }
  CHECK(perturbed_ac_density(leb, 1.0, 0.0).value == Approx(0.09199966835037523246).epsilon(1e-12));
}

TEST_CASE("perturbing an absolutely continuous measure keeps mass") {
  const PerturbationResult r = perturb(Measure::lebesgue(-1.0, 1.0, 0.5), 0.7);
  CHECK(r.mass_defect <= 1e-4);
  CHECK(r.bound_violations == 0);
  CHECK(r.max_bound_product <= 1.0 + 1e-8);
}

TEST_CASE("lebesgue perturbation produces atoms outside the support") {
  const PerturbationResult r = perturb(Measure::lebesgue(-1.0, 1.0, 0.5), 2.0);
  REQUIRE(r.atoms.size() == 1);
  CHECK(r.atoms[0].root > 1.0);
  CHECK(r.atoms[0].residual <= 1e-12);
}

TEST_CASE("representation matrix is unitary for spectral pairs") {
  const DiscreteMeasure mu = two_atoms();
  const DiscreteMeasure nu = atoms_of(perturb(mu.to_measure(), 1.0).perturbed);
  const RepresentationMatrix v = representation_matrix(mu, nu, 1.0);
  const UnitarityDefect d = unitarity_defect(v);
  CHECK(d.left <= 1e-12);
  CHECK(d.right <= 1e-12);
  CHECK(v.secular_residual <= 1e-12);
  const RigidityResult r = rigidity_normalizer(v.matrix);
  CHECK((r.h.array() - 1.0).abs().maxCoeff() <= 1e-12);

  // Isometry on a random f, via the eigenvector oracle.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Eigen::VectorXcd f(2);
  f << g(rng), g(rng);
  const Eigen::VectorXcd vf = v.matrix.apply(f);
  double lhs = 0.0, rhs = 0.0;
  for (int k = 0; k < 2; ++k) {
    lhs += nu.weights()[k] * std::norm(vf(k));
    rhs += mu.weights()[k] * std::norm(f(k));
  }
  CHECK(lhs == Approx(rhs).epsilon(1e-10));
}

TEST_CASE("representation formulas agree") {
  const DiscreteMeasure mu({-2.0, -0.5, 0.3, 1.7}, {0.1, 0.4, 0.3, 0.2});
  const double alpha = -0.8;
  const DiscreteMeasure nu = atoms_of(perturb(mu.to_measure(), alpha).perturbed);
  auto f = [](double x) { return std::exp(-x) + x; };
  const RepresentationMatrix v = representation_matrix(mu, nu, alpha);
  Eigen::VectorXcd fv(4);
  for (int j = 0; j < 4; ++j) fv(j) = f(mu.nodes()[j]);
  const Eigen::VectorXd direct = v.matrix.apply(fv).real();
  CHECK((apply_representation(mu, nu, alpha, f) - direct).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((tweak_reconstruction(mu, nu, alpha, f) - direct).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("T_eps 1 tends to 1/alpha") {
  const std::vector<double> ladder{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  for (double alpha : {1.0, 2.0}) {
    const DiscreteMeasure mu = two_atoms();
    const DiscreteMeasure nu = atoms_of(perturb(mu.to_measure(), alpha).perturbed);
    for (const auto& row : t_eps_one_limit(mu, nu, alpha, ladder)) {
      CHECK(row.target == Approx(1.0 / alpha));
      CHECK(row.residual < 1e-4);
    }
  }
}

TEST_CASE("rigidity rejects non-diagonal VV*") {
  Eigen::MatrixXcd m(2, 2);
  m << 1.0, 1.0, 0.0, 1.0;
  const WeightedMatrix w(m, Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0.5, 0.5));
  CHECK_THROWS_AS(rigidity_normalizer(w), DomainError);
}

TEST_CASE("tridiagonal eigen solver paths agree") {
  const std::vector<double> d{0.0, 0.0, 0.0}, e{1.0, 1.0};
  const TridiagonalEigen a = tridiagonal_eigen(d, e);
  const TridiagonalEigen b = tridiagonal_eigen_bisection(d, e);
  const double s2 = std::sqrt(2.0);
  const std::vector<double> expected{-s2, 0.0, s2};
  for (int k = 0; k < 3; ++k) {
    CHECK(a.values[k] == Approx(expected[k]).epsilon(1e-14));
    CHECK(b.values[k] == Approx(expected[k]).epsilon(1e-12));
    CHECK(std::abs(std::abs(a.vectors(0, k)) - std::abs(b.vectors(0, k))) <= 1e-10);
  }
}

TEST_CASE("property: perturbation matches the dense oracle on random measures") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> x(-5.0, 5.0), w(0.1, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> nodes(30), weights(30);
    for (auto& v : nodes) v = x(rng);
    for (auto& v : weights) v = w(rng) / 30.0;
    std::sort(nodes.begin(), nodes.end());
    const DiscreteMeasure mu(nodes, weights);
    for (double alpha : {-3.0, 0.2}) {
      const DiscreteMeasure nu = atoms_of(perturb(mu.to_measure(), alpha).perturbed);
      const DiscreteMeasure oracle = direct_discrete_perturbation(mu, alpha).perturbed;
      REQUIRE(nu.size() == oracle.size());
      for (std::size_t k = 0; k < nu.size(); ++k) {
        CHECK(std::abs(nu.nodes()[k] - oracle.nodes()[k]) <= 1e-10);
        CHECK(std::abs(nu.weights()[k] - oracle.weights()[k]) <= 1e-10);
      }
      CHECK(nu.total_mass() == Approx(mu.total_mass()).epsilon(1e-12));
    }
  }
}
