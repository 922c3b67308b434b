#include "rankone/errors.hpp"
#include "rankone/measure.hpp"
#include "rankone/measure_json.hpp"
#include "rankone/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace rankone;
using doctest::Approx;

TEST_CASE("gauss-legendre two point rule on [0,1]") {
  const GaussRule r = gauss_legendre(2, 0.0, 1.0);
  REQUIRE(r.nodes.size() == 2);
  CHECK(r.nodes[0] == Approx(0.21132486540518711775).epsilon(1e-15));
  CHECK(r.nodes[1] == Approx(0.78867513459481288225).epsilon(1e-15));
  CHECK(r.weights[0] == Approx(0.5).epsilon(1e-15));
  CHECK(r.weights[1] == Approx(0.5).epsilon(1e-15));
}

TEST_CASE("gauss-legendre integrates polynomials of degree 2n-1 exactly") {
  for (int n : {3, 8, 20}) {
    const GaussRule r = gauss_legendre(n, -1.0, 2.0);
    double s = 0.0;
    for (std::size_t k = 0; k < r.nodes.size(); ++k) s += r.weights[k] * std::pow(r.nodes[k], 2 * n - 1);
    const double exact = (std::pow(2.0, 2 * n) - 1.0) / (2 * n);
    CHECK(s == Approx(exact).epsilon(1e-12));
  }
}

TEST_CASE("quadrature on very short intervals stays cheap and accurate") {
  const QuadResult a = integrate_smooth([](double x) { return 2.0 * x; }, 0.5, 0.5 + 1e-6);
  CHECK(a.value == Approx(1.000001e-6).epsilon(1e-12));
  const QuadResult b = integrate_endpoint_singular([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1e-8);
  CHECK(b.value == Approx(2e-4).epsilon(1e-10));
}

TEST_CASE("semicircle mass and moments") {
  const Measure s = Measure::semicircle();
  CHECK(std::abs(s.total_mass() - 1.0) <= 1e-10);
  CHECK(std::abs(moment(s, 1)) <= 1e-12);
  CHECK(std::abs(moment(s, 2) - 1.0) <= 1e-10);
  CHECK(std::abs(moment(s, 4) - 2.0) <= 1e-10);
}

TEST_CASE("mass_of on closed intervals counts endpoint atoms") {
  const Measure mu({{0.0, 0.25}, {1.0, 0.25}}, {make_piece(Interval(0.0, 1.0), weight::Constant{0.5})});
  CHECK(mu.mass_of(Interval(0.0, 1.0)) == Approx(1.0));
  CHECK(mu.mass_of(Interval(0.25, 0.75)) == Approx(0.25));
  CHECK(mu.mass_of(Interval(1.0, 1.0)) == Approx(0.25));
}

TEST_CASE("table densities integrate exactly") {
  const AcPiece p = make_piece(Interval(0.0, 2.0), weight::Table{{0.0, 1.0, 2.0}, {0.0, 2.0, 0.0}});
  const Measure mu({}, {p});
  CHECK(mu.total_mass() == Approx(2.0).epsilon(1e-14));
  CHECK(mu.mass_of(Interval(0.0, 0.5)) == Approx(0.25).epsilon(1e-14));
}

TEST_CASE("discretize preserves mass") {
  const DiscreteMeasure d = discretize(Measure::semicircle(), 64);
  CHECK(std::abs(d.total_mass() - 1.0) <= 1e-12);
  const DiscreteMeasure l = discretize(Measure::lebesgue(0.0, 1.0), 2);
  CHECK(l.nodes()[0] == Approx(0.21132486540518711775));
  CHECK(l.weights()[1] == Approx(0.5));
}

TEST_CASE("invalid measures are rejected") {
  CHECK_THROWS_AS(Measure({{0.0, -1.0}}, {}), ValidationError);
  CHECK_THROWS_AS(make_piece(Interval(1.0, 0.0), weight::Constant{1.0}), ValidationError);
  CHECK_THROWS_AS(make_piece(Interval(0.0, 1.0), weight::PowerLaw{1.0, -1.5}), ValidationError);
  CHECK_THROWS_AS(make_piece(Interval(0.0, 2.0), weight::PowerLog{1.0, 1.0}), ValidationError);
}

TEST_CASE("distribution function and rearrangement of w = x") {
  const AcPiece w = make_piece(Interval(0.0, 1.0), weight::PowerLaw{1.0, 1.0});
  for (double t : {0.01, 0.3, 0.9}) {
    CHECK(distribution_function(w, t) == Approx(t));
    CHECK(increasing_rearrangement(w, t) == Approx(t));
  }
  CHECK(distribution_function(w, 2.0) == Approx(1.0));
}

TEST_CASE("measure json round trip and field errors") {
  const Measure mu({{-1.0, 0.5}, {1.0, 0.5}}, {make_piece(Interval(0.0, 0.5), weight::PowerLog{1.0, 2.0})});
  const Measure back = measure_from_json(to_json(mu));
  CHECK(to_json(back) == to_json(mu));
  const auto bad = nlohmann::json::parse(R"({"atoms": [[0, -1]]})");
  try {
    measure_from_json(bad);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("mass > 0") != std::string::npos);
  }
  CHECK_THROWS_AS(measure_from_json(nlohmann::json::parse(R"({"atomz": []})")), ValidationError);
  CHECK(number_from_json(json_number(INFINITY)) == INFINITY);
}

TEST_CASE("property: mass is additive over random splits") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const Measure s = Measure::semicircle();
  for (int i = 0; i < 20; ++i) {
    const double c = u(rng);
    CHECK(s.mass_of(Interval(-2.0, c)) + s.mass_of(Interval(c, 2.0)) == Approx(1.0).epsilon(1e-10));
  }
}
