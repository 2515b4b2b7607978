#pragma once

#include <cstddef>
#include <vector>

namespace weldpred {

/// Minimal dense row-major matrix of doubles.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, fill) {}

  double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }

  bool empty() const { return rows == 0 || cols == 0; }
};

/// Least-squares solution of min ||A X - B||_F via Householder QR.
/// A is m x n with m >= n, B is m x k; returns the n x k solution.
/// Sets *rank_deficient when a diagonal of R falls below a relative threshold
/// (the solve is still returned; callers re-solve with a ridge term).
Matrix qr_least_squares(Matrix a, Matrix b, bool* rank_deficient = nullptr);

}  // namespace weldpred
