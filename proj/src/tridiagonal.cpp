#include "rankone/tridiagonal.hpp"

#include "rankone/errors.hpp"
#include "rankone/logging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

namespace rankone {

namespace {

void check_sizes(std::span<const double> diag, std::span<const double> off) {
  if (diag.empty()) throw DomainError("tridiagonal_eigen: empty matrix");
  if (off.size() + 1 != diag.size()) throw DomainError("tridiagonal_eigen: off-diagonal must have n - 1 entries");
}

TridiagonalEigen sorted(std::vector<double> d, Eigen::MatrixXd z) {
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return d[i] < d[j]; });
  TridiagonalEigen out;
  out.vectors.resize(z.rows(), z.cols());
  for (std::size_t k = 0; k < order.size(); ++k) {
    out.values.push_back(d[order[k]]);
    out.vectors.col(k) = z.col(order[k]);
  }
  return out;
}

std::optional<TridiagonalEigen> implicit_ql(std::span<const double> diag, std::span<const double> off) {
  const int n = static_cast<int>(diag.size());
  std::vector<double> d(diag.begin(), diag.end());
  std::vector<double> e(n, 0.0);
  std::copy(off.begin(), off.end(), e.begin());
  Eigen::MatrixXd z = Eigen::MatrixXd::Identity(n, n);
  const double eps = std::numeric_limits<double>::epsilon();
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m = l;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m == l) break;
      if (iter++ == 30) return std::nullopt;
      double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
      double r = std::hypot(g, 1.0);
      g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
      double s = 1.0, c = 1.0, p = 0.0;
      int i = m - 1;
      for (; i >= l; --i) {
        double f = s * e[i];
        const double b = c * e[i];
        r = std::hypot(f, g);
        e[i + 1] = r;
        if (r == 0.0) {
          d[i + 1] -= p;
          e[m] = 0.0;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[i + 1] - p;
        r = (d[i] - g) * s + 2.0 * c * b;
        p = s * r;
        d[i + 1] = g + p;
        g = c * r - b;
        for (int k = 0; k < n; ++k) {
          f = z(k, i + 1);
          z(k, i + 1) = s * z(k, i) + c * f;
          z(k, i) = c * z(k, i) - s * f;
        }
      }
      if (r == 0.0 && i >= l) continue;
      d[l] -= p;
      e[l] = g;
      e[m] = 0.0;
    } while (m != l);
  }
  return sorted(std::move(d), std::move(z));
}

// Number of eigenvalues strictly less than x.
int sturm_count(std::span<const double> d, std::span<const double> e, double x) {
  int count = 0;
  double q = 1.0;
  const double tiny = std::numeric_limits<double>::min();
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double e2 = i == 0 ? 0.0 : e[i - 1] * e[i - 1];
    q = d[i] - x - (i == 0 ? 0.0 : e2 / q);
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++count;
  }
  return count;
}

// Solves (T - shift) x = b by Gaussian elimination with partial pivoting.
Eigen::VectorXd tridiagonal_solve(std::span<const double> d, std::span<const double> e, double shift,
                                  Eigen::VectorXd b) {
  const int n = static_cast<int>(d.size());
  if (n == 1) {
    const double piv = d[0] - shift;
    b(0) /= piv == 0.0 ? 1e-300 : piv;
    return b;
  }
  // Banded LU with one extra superdiagonal from row swaps.
  std::vector<double> lo(n, 0.0), di(n), up(n, 0.0), up2(n, 0.0);
  for (int i = 0; i < n; ++i) {
    di[i] = d[i] - shift;
    if (i + 1 < n) {
      up[i] = e[i];
      lo[i + 1] = e[i];
    }
  }
  for (int i = 0; i + 1 < n; ++i) {
    if (std::abs(lo[i + 1]) > std::abs(di[i])) {
      std::swap(di[i], lo[i + 1]);
      std::swap(up[i], di[i + 1]);
      std::swap(up2[i], up[i + 1]);
      std::swap(b(i), b(i + 1));
    }
    if (di[i] == 0.0) di[i] = 1e-300;
    const double m = lo[i + 1] / di[i];
    di[i + 1] -= m * up[i];
    if (i + 1 < n - 1) up[i + 1] -= m * up2[i];
    b(i + 1) -= m * b(i);
  }
  if (di[n - 1] == 0.0) di[n - 1] = 1e-300;
  b(n - 1) /= di[n - 1];
  b(n - 2) = (b(n - 2) - up[n - 2] * b(n - 1)) / di[n - 2];
  for (int i = n - 3; i >= 0; --i) b(i) = (b(i) - up[i] * b(i + 1) - up2[i] * b(i + 2)) / di[i];
  return b;
}

}  // namespace

TridiagonalEigen tridiagonal_eigen_bisection(std::span<const double> diag, std::span<const double> off) {
  check_sizes(diag, off);
  const int n = static_cast<int>(diag.size());
  double lo = diag[0], hi = diag[0];
  for (int i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(off[i - 1]) : 0.0) + (i + 1 < n ? std::abs(off[i]) : 0.0);
    lo = std::min(lo, diag[i] - r);
    hi = std::max(hi, diag[i] + r);
  }
  const double pad = 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  lo -= pad;
  hi += pad;
  TridiagonalEigen out;
  out.used_fallback = true;
  out.vectors.resize(n, n);
  for (int k = 0; k < n; ++k) {
    double a = lo, b = hi;
    for (int it = 0; it < 200 && b - a > 2.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b)); ++it) {
      const double mid = 0.5 * (a + b);
      if (sturm_count(diag, off, mid) > k) b = mid;
      else a = mid;
    }
    out.values.push_back(0.5 * (a + b));
  }
  for (int k = 0; k < n; ++k) {
    const double scale = std::max(1.0, std::abs(out.values[k]));
    const double shift = out.values[k] + 1e-14 * scale * (1 + k % 3);
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
    for (int j = 0; j < n; ++j) x(j) += 1e-3 * ((j * 7919 + k * 104729) % 97) / 97.0;
    for (int it = 0; it < 4; ++it) {
      x = tridiagonal_solve(diag, off, shift, x);
      // Orthogonalize against earlier vectors of a near-degenerate cluster.
      for (int j = k - 1; j >= 0 && out.values[k] - out.values[j] < 1e-8 * scale; --j)
        x -= out.vectors.col(j).dot(x) * out.vectors.col(j);
      x.normalize();
    }
    out.vectors.col(k) = x;
  }
  return out;
}

TridiagonalEigen tridiagonal_eigen(std::span<const double> diag, std::span<const double> off) {
  check_sizes(diag, off);
  if (auto ql = implicit_ql(diag, off)) return *std::move(ql);
  log::warn("tridiagonal_eigen: QL iteration cap hit, falling back to bisection");
  return tridiagonal_eigen_bisection(diag, off);
}

}  // namespace rankone
