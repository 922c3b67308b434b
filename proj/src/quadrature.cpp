#include "rankone/quadrature.hpp"

#include "rankone/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <numbers>

namespace rankone {

GaussRule gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre: n must be >= 1");
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = (n == 1) ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

GaussRule gauss_legendre(int n, double a, double b) {
  GaussRule rule = gauss_legendre(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  return rule;
}

QuadResult integrate_smooth(const std::function<double(double)>& f, double a,
                            double b, double rel_tol) {
  QuadResult out;
  if (a == b) return out;
  // Boost's error estimate degrades on very short intervals; work on [0, 1].
  const double h = b - a;
  auto g = [&](double u) { return f(a + h * u); };
  double l1 = 0.0;
  out.value = h * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, 0.0, 1.0, 20, rel_tol,
                                                                                  &out.error, &l1);
  out.error *= std::abs(h);
  return out;
}

QuadResult integrate_endpoint_singular(const std::function<double(double)>& f,
                                       double a, double b, double rel_tol) {
  QuadResult out;
  if (a == b) return out;
  thread_local boost::math::quadrature::tanh_sinh<double> integrator(12);
  double l1 = 0.0;
  std::size_t levels = 0;
  const double h = b - a;
  out.value = h * integrator.integrate(
                      [&](double u) {
                        const double v = f(a + h * u);
                        return std::isfinite(v) ? v : 0.0;
                      },
                      0.0, 1.0, rel_tol, &out.error, &l1, &levels);
  out.error *= std::abs(h);
  return out;
}

QuadResult integrate_endpoint_singular(const std::function<double(double, double, double)>& f,
                                       double a, double b, double rel_tol) {
  QuadResult out;
  if (a == b) return out;
  thread_local boost::math::quadrature::tanh_sinh<double> integrator(12);
  const double len = b - a;
  double l1 = 0.0;
  std::size_t levels = 0;
  // Boost passes the signed distance to the nearer endpoint: negative for a.
  out.value = integrator.integrate(
      [&](double x, double xc) {
        const double to_a = xc < 0.0 ? -xc : len - xc;
        const double to_b = xc < 0.0 ? len + xc : xc;
        const double v = f(x, to_a, to_b);
        return std::isfinite(v) ? v : 0.0;
      },
      a, b, rel_tol, &out.error, &l1, &levels);
  return out;
}

}  // namespace rankone
