#include "rankone/criterion.hpp"
#include "rankone/errors.hpp"

#include <doctest.h>

#include <cmath>

using namespace rankone;
using doctest::Approx;

namespace {

AcPiece on01(WeightDescriptor w) { return make_piece(Interval(0.0, 1.0), std::move(w)); }

}  // namespace

TEST_CASE("analytic corpus") {
  struct Case {
    AcPiece piece;
    Divergence expected;
  };
  const std::vector<Case> corpus{
      {on01(weight::Constant{1.0}), Divergence::Diverges},
      {on01(weight::PowerLaw{1.0, 1.0}), Divergence::Diverges},
      {on01(weight::PowerLaw{1.0, 2.0}), Divergence::Converges},
      {make_piece(Interval(0.0, 0.5), weight::PowerLog{1.0, 0.5}), Divergence::Diverges},
      {make_piece(Interval(0.0, 0.5), weight::PowerLog{1.0, 2.0}), Divergence::Converges},
      {make_piece(Interval(0.0, 0.5), weight::PowerLog{1.0, 1.5}), Divergence::Converges},
  };
  for (const auto& c : corpus) {
    const EquivalenceAudit a = equivalence_audit(c.piece);
    CHECK(a.rearrangement.verdict == c.expected);
    CHECK(a.distribution.verdict == c.expected);
    CHECK(a.rearrangement.method == VerdictMethod::Analytic);
    CHECK(a.agree);
  }
}

TEST_CASE("numeric fit on polynomial densities") {
  const EquivalenceAudit x = equivalence_audit(on01(weight::Polynomial{{0.0, 1.0}}));
  CHECK(x.distribution.method == VerdictMethod::NumericFit);
  CHECK(x.distribution.verdict == Divergence::Diverges);
  CHECK(x.rearrangement.verdict == Divergence::Diverges);
  const EquivalenceAudit x2 = equivalence_audit(on01(weight::Polynomial{{0.0, 0.0, 1.0}}));
  CHECK(x2.distribution.verdict == Divergence::Converges);
  CHECK(x2.rearrangement.verdict == Divergence::Converges);
  CHECK(x2.agree);
  const DivergenceVerdict c = distribution_test(on01(weight::Polynomial{{1.0}}));
  CHECK(c.verdict == Divergence::Diverges);
}

TEST_CASE("measure overloads") {
  const Measure gap({}, {make_piece(Interval(0.0, 0.4), weight::Constant{1.0}),
                         make_piece(Interval(0.6, 1.0), weight::Constant{1.0})});
  CHECK(distribution_test(gap, Interval(0.0, 1.0)).verdict == Divergence::Converges);
  const Measure w({}, {on01(weight::PowerLaw{2.0, 1.0})});
  CHECK(distribution_test(w, Interval(0.0, 1.0)).verdict == Divergence::Diverges);
}

TEST_CASE("o(1/t) tails") {
  const auto grid = default_t_grid();
  CHECK(grid.size() == 29);
  CHECK(grid.front() == Approx(10.0));
  CHECK(grid.back() == Approx(1e8));
  CHECK(olittle_test(on01(weight::Constant{1.0}), grid).olittle);
  CHECK_FALSE(olittle_test(on01(weight::PowerLaw{1.0, 1.0}), grid).olittle);
  CHECK_FALSE(olittle_test(on01(weight::PowerLaw{1.0, 2.0}), grid).olittle);
  CHECK(olittle_test(on01(weight::PowerLaw{1.0, 0.5}), grid).olittle);
}

TEST_CASE("averaged condition") {
  const Measure sigma = Measure::lebesgue(0.0, 1.0);
  CHECK(e_probe(sigma, 2.0).value == Approx(0.5).epsilon(1e-12));
  CHECK(e_probe(sigma, -1.0).value == Approx(0.5).epsilon(1e-12));
  CHECK_FALSE(e_probe(sigma, 0.5).finite);
  const Measure tri({}, {on01(weight::PowerLaw{2.0, 1.0})});
  // int_0^1 2b/(3 - b)^2 db = 1 + 2 ln(2/3)
  CHECK(e_probe(tri, 3.0).value == Approx(2.0 * std::log(2.0 / 3.0) + 1.0).epsilon(1e-10));
  CHECK(e_probe(Measure::dirac(1.0), 1.0).finite == false);

  const Measure mu({}, {on01(weight::PowerLaw{2.0, 1.0})});
  const AveragedSetup s = averaged_setup(mu, sigma);
  CHECK(s.beta_nodes.size() == 16);
  CHECK(s.expected_mass == Approx(1.0));
  CHECK(s.tau_mass == Approx(1.0).epsilon(1e-4));
  CHECK(verdict(mu, Interval(0.0, 1.0), 2.0, s).verdict == SpectrumVerdict::NoSingularSpectrumOnI);
  CHECK(verdict(mu, Interval(0.0, 1.0), 0.5, s).verdict == SpectrumVerdict::Inconclusive);
}

TEST_CASE("verdicts") {
  const Measure friedrichs({}, {on01(weight::PowerLaw{2.0, 1.0})});
  const VerdictResult v = verdict(friedrichs, Interval(0.0, 1.0), 1.0);
  CHECK(v.verdict == SpectrumVerdict::NoSingularSpectrumOnI);
  CHECK(v.test.method == VerdictMethod::Analytic);
  CHECK_THROWS_AS(verdict(friedrichs, Interval(0.0, 1.0), 0.0), DomainError);
  const Measure quad({}, {on01(weight::PowerLaw{3.0, 2.0})});
  CHECK(verdict(quad, Interval(0.0, 1.0), 1.0).verdict == SpectrumVerdict::Inconclusive);
  CHECK(verdict(friedrichs, Interval(2.0, 3.0), 1.0).verdict == SpectrumVerdict::Inconclusive);
  const auto j = to_json(v);
  CHECK(j["test"]["method"] == "Analytic");
}
