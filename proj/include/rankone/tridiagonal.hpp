#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace rankone {

struct TridiagonalEigen {
  std::vector<double> values;  // ascending
  Eigen::MatrixXd vectors;     // column k is the unit eigenvector for values[k]
  bool used_fallback = false;
};

// Symmetric tridiagonal eigensolver: implicit-shift QL with eigenvector
// accumulation, at most 30 sweeps per eigenvalue; on failure falls back to
// Sturm bisection plus inverse iteration. off has size diag.size() - 1.
TridiagonalEigen tridiagonal_eigen(std::span<const double> diag, std::span<const double> off);

// Fallback path exposed for testing.
TridiagonalEigen tridiagonal_eigen_bisection(std::span<const double> diag, std::span<const double> off);

}  // namespace rankone
