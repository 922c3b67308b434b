#pragma once

#include <functional>
#include <vector>

namespace rankone {

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule on [-1, 1], nodes ascending.
GaussRule gauss_legendre(int n);

// Same rule affinely mapped to [a, b].
GaussRule gauss_legendre(int n, double a, double b);

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

// Adaptive Gauss-Kronrod (G15/K31) on [a, b]. Suited to integrands that are
// smooth or have interior kinks; not to endpoint singularities.
QuadResult integrate_smooth(const std::function<double(double)>& f, double a,
                            double b, double rel_tol = 1e-12);

// Double-exponential (tanh-sinh) rule on [a, b]; handles integrable
// endpoint singularities. f never sees the endpoints themselves.
QuadResult integrate_endpoint_singular(const std::function<double(double)>& f,
                                       double a, double b,
                                       double rel_tol = 1e-12);

// Same, but f(x, x - a, b - x) also receives the distances to the endpoints,
// free of cancellation near them.
QuadResult integrate_endpoint_singular(const std::function<double(double, double, double)>& f,
                                       double a, double b, double rel_tol = 1e-12);

}  // namespace rankone
