#include "rankone/cauchy.hpp"
#include "rankone/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace rankone;
using doctest::Approx;

namespace {
const cplx I(0.0, 1.0);
}

TEST_CASE("borel transform of two atoms at i") {
  const Measure mu({{-1.0, 0.5}, {1.0, 0.5}}, {});
  const cplx f = borel_transform(mu, I);
  CHECK(std::abs(f - 0.5 * I) <= 1e-15);
}

TEST_CASE("borel transform of the semicircle at i") {
  const cplx f = borel_transform(Measure::semicircle(), I);
  CHECK(std::abs(f - cplx(0.0, 0.61803398874989484820)) <= 1e-8);
}

TEST_CASE("quadrature path agrees with closed forms") {
  // Same density as a table, which forces the piecewise closed form, and as
  // a polynomial on a sub-interval, which forces the segment formula.
  const Measure lin({}, {make_piece(Interval(0.0, 1.0), weight::PowerLaw{1.0, 1.0})});
  const Measure poly({}, {make_piece(Interval(0.0, 1.0), weight::Polynomial{{0.0, 1.0}})});
  const cplx z(2.0, 0.0);
  CHECK(std::abs(borel_transform(lin, cplx(2.0, 1e-300)) - cplx(-0.38629436111989061883, 0.0)) <= 1e-10);
  CHECK(std::abs(borel_transform(poly, z) - cplx(-0.38629436111989061883, 0.0)) <= 1e-12);
}

TEST_CASE("arcsine transform off the support") {
  const Measure a({}, {make_piece(Interval(-1.0, 1.0), weight::Arcsine{1.0})});
  CHECK(std::abs(borel_transform(a, cplx(2.0, 0.0)) - cplx(-0.57735026918962576451, 0.0)) <= 1e-12);
}

TEST_CASE("boundary values") {
  const HerglotzFunction semi(Measure::semicircle());
  const BoundaryValue b0 = boundary_value(semi, 0.0);
  CHECK(b0.method == BoundaryMethod::ClosedForm);
  CHECK(std::abs(b0.value - I) <= 1e-12);

  // Lebesgue on [-1,1]: F(x + i0) = ln((1 - x)/(1 + x)) + i pi.
  const HerglotzFunction leb(Measure::lebesgue(-1.0, 1.0));
  const BoundaryValue b = boundary_value(leb, 0.5);
  CHECK(std::abs(b.value - cplx(-1.09861228866810969140, std::numbers::pi)) <= 1e-10);

  // PV of (1 + t)/(t - 1/2) over [0,1] is 1 by hand; Im = pi w(1/2).
  const Measure p({}, {make_piece(Interval(0.0, 1.0), weight::Polynomial{{1.0, 1.0}})});
  const auto cf = boundary_value_closed_form(p, 0.5);
  REQUIRE(cf.has_value());
  CHECK(std::abs(*cf - cplx(1.0, 1.5 * std::numbers::pi)) <= 1e-12);

  const HerglotzFunction atom(Measure::dirac(0.0));
  CHECK(boundary_value(atom, 0.0).method == BoundaryMethod::Divergent);
}

TEST_CASE("extrapolated boundary value for a density without a closed form") {
  const Measure pl({}, {make_piece(Interval(0.0, 0.5), weight::PowerLog{1.0, 2.0})});
  const HerglotzFunction F(pl);
  const BoundaryValue b = boundary_value(F, 0.25);
  // Imaginary part is pi w(x).
  const double w = 0.25 * std::pow(std::log(4.0), -2.0);
  CHECK(b.value.imag() == Approx(std::numbers::pi * w).epsilon(1e-4));
}

TEST_CASE("weighted matrices and norms") {
  const DiscreteMeasure mu({-1.0, 1.0}, {0.5, 0.5});
  const DiscreteMeasure nu({-0.6180339887498949, 1.618033988749895}, {0.27639320225002103, 0.72360679774997897});
  for (double eps : {1.0, 1e-1, 1e-3, 1e-6}) {
    const NormEstimate n = operator_norm(regularized_matrix(mu, nu, eps));
    CHECK(n.converged);
    CHECK(n.value <= 2.0 * (1.0 + 1e-6));
  }
  // Identity-like operator: norm 1 in the weighted spaces.
  const WeightedMatrix id(Eigen::MatrixXcd::Identity(2, 2), Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0.5, 0.5));
  CHECK(operator_norm(id).value == Approx(1.0).epsilon(1e-10));
  const WeightedMatrix adj = regularized_matrix(mu, nu, 0.1).adjoint();
  CHECK(adj.rows() == 2);
  CHECK_THROWS_AS(cauchy_kernel_matrix(mu, mu), DomainError);
}

TEST_CASE("A2 characteristics") {
  const Measure a({{0.0, 0.5}, {1.0, 0.5}}, {});
  const Measure b({{0.5, 1.0}}, {});
  const auto cands = a2_candidates(a, b, 6, 10);
  const A2Report r = interval_a2_sup(a, b, cands);
  // Best interval is [0, 0.5] or [0.5, 1]: 0.5 * 1 / 0.25.
  CHECK(r.sup_value == Approx(2.0));
  const AtomFamilyScan shared = atom_centered_scan(a, Measure::dirac(0.0), 0.0, 0.25, 10);
  CHECK(shared.divergent);
  CHECK(shared.growth_per_halving == Approx(4.0));
  CHECK(poisson_a2(a, b, cplx(0.5, 1.0)) > 0.0);
}

TEST_CASE("level set tails") {
  const Measure eta({{0.0, 1.0}}, {make_piece(Interval(-1.0, 1.0), weight::Constant{1.0})});
  const std::vector<double> t{1e2, 1e3};
  const LevelsetTail tail = levelset_tail(eta, Interval(-1.0, 1.0), t, 100000);
  CHECK(tail.product.back() == Approx(2.0).epsilon(0.05));
  const LevelsetTail leb = levelset_tail(Measure::lebesgue(-1.0, 1.0), Interval(-1.0, 1.0), t, 100000);
  CHECK(leb.product.back() < 0.1);
}
