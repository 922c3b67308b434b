#include "rankone/jacobi.hpp"

#include "rankone/errors.hpp"
#include "rankone/measure_json.hpp"
#include "rankone/quadrature.hpp"
#include "rankone/tridiagonal.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace rankone {

void JacobiParams::validate() const {
  if (b.empty()) throw ValidationError("jacobi: invariant violated: N >= 1");
  if (a.size() + 1 != b.size()) throw ValidationError("jacobi: invariant violated: |a| = N - 1, |b| = N");
  for (double v : a)
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("jacobi: invariant violated: a_n > 0");
  for (double v : b)
    if (!std::isfinite(v)) throw ValidationError("jacobi: invariant violated: b_n finite");
}

JacobiFromMeasure jacobi_from_measure(const DiscreteMeasure& mu, int n) {
  if (n < 1) throw DomainError("jacobi_from_measure: N must be >= 1");
  if (std::abs(mu.total_mass() - 1.0) > 1e-9)
    throw DomainError("jacobi_from_measure: measure must have mass 1 (normalize first)");
  const auto m = static_cast<Eigen::Index>(mu.size());
  Eigen::VectorXd x(m), q(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    x(i) = mu.nodes()[i];
    q(i) = std::sqrt(mu.weights()[i]);
  }
  q.normalize();
  const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
  Eigen::MatrixXd basis(m, std::min<Eigen::Index>(n, m) + 1);
  basis.col(0) = q;
  JacobiFromMeasure out;
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(m);
  double a_prev = 0.0;
  for (int k = 0; k < n; ++k) {
    const Eigen::VectorXd cur = basis.col(k);
    Eigen::VectorXd v = x.cwiseProduct(cur);
    const double bk = cur.dot(v);
    out.params.b.push_back(bk);
    if (k + 1 == n) break;
    v -= bk * cur + a_prev * prev;
    for (int pass = 0; pass < 2; ++pass) {
      const auto done = basis.leftCols(k + 1);
      v -= done * (done.transpose() * v);
    }
    const double ak = v.norm();
    if (ak <= 1e-10 * scale || k + 1 >= m) {
      out.breakdown = k + 1;
      break;
    }
    out.params.a.push_back(ak);
    basis.col(k + 1) = v / ak;
    prev = cur;
    a_prev = ak;
  }
  return out;
}

JacobiFromMeasure jacobi_from_measure(const Measure& mu, int n) {
  if (n < 1) throw DomainError("jacobi_from_measure: N must be >= 1");
  if (std::abs(mu.total_mass() - 1.0) > 1e-9)
    throw DomainError("jacobi_from_measure: measure must have mass 1 (normalize first)");
  return jacobi_from_measure(discretize(mu, std::max(4 * n, 2000)), n);
}

DiscreteMeasure measure_from_jacobi(const JacobiParams& j) {
  j.validate();
  const auto eig = tridiagonal_eigen(j.b, j.a);
  std::vector<double> weights;
  for (std::size_t k = 0; k < eig.values.size(); ++k) {
    const double c = eig.vectors(0, static_cast<Eigen::Index>(k));
    weights.push_back(std::max(c * c, std::numeric_limits<double>::min()));
  }
  return DiscreteMeasure(eig.values, std::move(weights));
}

JacobiParams perturb_b1(const JacobiParams& j, double alpha) {
  JacobiParams out = j;
  if (!out.b.empty()) out.b[0] += alpha;
  return out;
}

double hilbert_schmidt_defect(const JacobiParams& j) {
  double s = 0.0;
  for (double v : j.a) s += (v - 1.0) * (v - 1.0);
  for (double v : j.b) s += v * v;
  return s;
}

JacobiParams free_jacobi(int n) {
  if (n < 1) throw DomainError("free_jacobi: N must be >= 1");
  return {std::vector<double>(n - 1, 1.0), std::vector<double>(n, 0.0)};
}

namespace {

constexpr double kUnderflow = 1e-300;
constexpr double kNegligible = 1e-6;

// Subintervals of [lo, hi] not covered by any piece.
std::vector<Interval> uncovered(const Measure& mu, double lo, double hi) {
  std::vector<Interval> ivs;
  for (const auto& p : mu.pieces()) ivs.push_back(p.interval);
  std::sort(ivs.begin(), ivs.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> out;
  double cursor = lo;
  for (const auto& iv : ivs) {
    if (iv.hi <= cursor) continue;
    if (iv.lo > cursor) out.emplace_back(cursor, std::min(iv.lo, hi));
    cursor = std::max(cursor, iv.hi);
    if (cursor >= hi) break;
  }
  if (cursor < hi) out.emplace_back(cursor, hi);
  return out;
}

// Longest run of grid cells in [lo, hi] where the density underflows.
double underflow_run(const Measure& mu, double lo, double hi) {
  constexpr int kCells = 1 << 16;
  const double h = (hi - lo) / kCells;
  double best = 0.0, run = 0.0;
  for (int i = 0; i < kCells; ++i) {
    const double x = lo + (i + 0.5) * h;
    if (mu.density(x) < kUnderflow) {
      run += h;
      best = std::max(best, run);
    } else {
      run = 0.0;
    }
  }
  return best;
}

}  // namespace

KillipSimonReport killip_simon_check(const Measure& mu, double mass_tol) {
  KillipSimonReport r;
  // Blumenthal-Weyl: a.c. part inside [-2, 2] and covering it, atoms outside
  // [-2, 2] form sequences ordered toward +-2.
  bool inside = true;
  for (const auto& p : mu.pieces())
    if (p.interval.lo < -2.0 || p.interval.hi > 2.0) inside = false;
  double gap = 0.0;
  for (const auto& iv : uncovered(mu, -2.0, 2.0)) gap += iv.length();
  for (const auto& a : mu.atoms()) {
    if (a.position > 2.0) r.lambda_plus.push_back(a.position);
    if (a.position < -2.0) r.lambda_minus.push_back(a.position);
  }
  std::sort(r.lambda_plus.begin(), r.lambda_plus.end(), std::greater<>());
  std::sort(r.lambda_minus.begin(), r.lambda_minus.end());
  if (!inside) {
    r.blumenthal_weyl_detail = "a.c. support extends beyond [-2,2]";
  } else if (gap > 1e-12) {
    r.blumenthal_weyl_detail = "a.c. support does not cover [-2,2] (uncovered length " + std::to_string(gap) + ")";
  } else {
    r.blumenthal_weyl = true;
    r.blumenthal_weyl_detail = "ess supp = [-2,2]; finitely many eigenvalues outside";
  }

  for (double l : r.lambda_plus) r.lieb_thirring += std::pow(l - 2.0, 1.5);
  for (double l : r.lambda_minus) r.lieb_thirring += std::pow(-l - 2.0, 1.5);
  r.lieb_thirring_finite = std::isfinite(r.lieb_thirring);

  // Quasi-Szego.
  const double neg_inf = -std::numeric_limits<double>::infinity();
  bool divergent = false;
  for (const auto& iv : uncovered(mu, -2.0, 2.0))
    if (iv.length() > kNegligible) divergent = true;
  if (!divergent && underflow_run(mu, -2.0, 2.0) > kNegligible) divergent = true;
  if (divergent) {
    r.quasi_szego = neg_inf;
  } else {
    std::vector<double> cuts{-2.0, 2.0};
    for (const auto& p : mu.pieces()) {
      cuts.push_back(std::clamp(p.interval.lo, -2.0, 2.0));
      cuts.push_back(std::clamp(p.interval.hi, -2.0, 2.0));
      if (const auto* t = std::get_if<weight::Table>(&p.weight))
        for (std::size_t i = 0; i < t->x.size(); ++i)
          if (t->y[i] == 0.0) cuts.push_back(std::clamp(t->x[i], -2.0, 2.0));
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    auto f = [&](double t) {
      const double w = std::max(mu.density(t), kUnderflow);
      return std::sqrt(std::max(0.0, 4.0 - t * t)) * std::log(w);
    };
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
      total += integrate_endpoint_singular(f, cuts[i], cuts[i + 1], 1e-10).value;
    r.quasi_szego = total;
  }
  r.quasi_szego_finite = std::isfinite(r.quasi_szego);

  r.mass = mu.total_mass();
  r.normalization = std::abs(r.mass - 1.0) <= mass_tol;
  r.verdict = r.blumenthal_weyl && r.lieb_thirring_finite && r.quasi_szego_finite && r.normalization;
  return r;
}

Measure killip_simon_family(double p, double center, int samples) {
  if (samples < 3) throw DomainError("killip_simon_family: need at least 3 samples");
  if (!(center > -2.0 && center < 2.0)) throw DomainError("killip_simon_family: center must lie in (-2, 2)");
  const double K = 4.0 * std::numbers::e;
  auto w = [&](double t) {
    const double u = std::abs(t - center);
    const double semi = std::sqrt(std::max(0.0, 4.0 - t * t)) / (2.0 * std::numbers::pi);
    if (u == 0.0) return 0.0;
    return semi * u * std::pow(std::log(K / u), -p);
  };
  std::vector<double> xs;
  for (int i = 0; i < samples; ++i) xs.push_back(-2.0 + 4.0 * i / (samples - 1));
  xs.back() = 2.0;
  xs.push_back(center);
  for (int k = 3; k <= 60; ++k) {
    const double h = std::ldexp(1.0, -k);
    if (center - h > -2.0) xs.push_back(center - h);
    if (center + h < 2.0) xs.push_back(center + h);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::vector<double> ys;
  for (double x : xs) ys.push_back(w(x));
  double mass = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) mass += 0.5 * (ys[i] + ys[i + 1]) * (xs[i + 1] - xs[i]);
  for (double& y : ys) y /= mass;
  return Measure({}, {make_piece(Interval(-2.0, 2.0), weight::Table{xs, ys})});
}

nlohmann::json to_json(const JacobiParams& j) { return {{"a", j.a}, {"b", j.b}}; }

JacobiParams jacobi_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("jacobi: expected an object with \"a\" and \"b\"");
  for (const auto& [k, v] : j.items())
    if (k != "a" && k != "b") throw ValidationError("jacobi: unknown field \"" + k + "\"");
  JacobiParams p;
  try {
    p.a = j.at("a").get<std::vector<double>>();
    p.b = j.at("b").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("jacobi: ") + e.what());
  }
  p.validate();
  return p;
}

nlohmann::json to_json(const KillipSimonReport& r) {
  return {{"blumenthal_weyl",
           {{"pass", r.blumenthal_weyl},
            {"detail", r.blumenthal_weyl_detail},
            {"lambda_plus", r.lambda_plus},
            {"lambda_minus", r.lambda_minus}}},
          {"lieb_thirring", {{"pass", r.lieb_thirring_finite}, {"value", json_number(r.lieb_thirring)}}},
          {"quasi_szego", {{"pass", r.quasi_szego_finite}, {"value", json_number(r.quasi_szego)}}},
          {"normalization", {{"pass", r.normalization}, {"mass", json_number(r.mass)}}},
          {"verdict", r.verdict}};
}

}  // namespace rankone
