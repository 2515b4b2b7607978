#include "weldpred/matrix.hpp"

#include <cmath>
#include <limits>

#include "weldpred/error.hpp"

namespace weldpred {

Matrix qr_least_squares(Matrix a, Matrix b, bool* rank_deficient) {
  const int m = a.rows;
  const int n = a.cols;
  const int k = b.cols;
  if (m < n || b.rows != m) {
    throw Error(Errc::invalid_argument, "qr_least_squares: incompatible shapes");
  }

  // Householder triangularization applied to [A | B] in place.
  std::vector<double> v(m);
  for (int j = 0; j < n; ++j) {
    double norm2 = 0.0;
    for (int i = j; i < m; ++i) norm2 += a(i, j) * a(i, j);
    double norm = std::sqrt(norm2);
    if (norm == 0.0) continue;  // zero column, R(j,j) stays 0
    double alpha = a(j, j) >= 0.0 ? -norm : norm;
    double vnorm2 = norm2 - 2.0 * alpha * a(j, j) + alpha * alpha;
    if (vnorm2 == 0.0) continue;
    v[j] = a(j, j) - alpha;
    for (int i = j + 1; i < m; ++i) v[i] = a(i, j);

    auto reflect = [&](Matrix& mat, int col) {
      double dot = 0.0;
      for (int i = j; i < m; ++i) dot += v[i] * mat(i, col);
      double scale = 2.0 * dot / vnorm2;
      for (int i = j; i < m; ++i) mat(i, col) -= scale * v[i];
    };
    for (int c = j; c < n; ++c) reflect(a, c);
    for (int c = 0; c < k; ++c) reflect(b, c);
    // enforce exact zeros below the diagonal (numerical hygiene only)
    a(j, j) = alpha;
    for (int i = j + 1; i < m; ++i) a(i, j) = 0.0;
  }

  double max_diag = 0.0;
  for (int j = 0; j < n; ++j) max_diag = std::max(max_diag, std::abs(a(j, j)));
  const double tol = std::max(m, n) * std::numeric_limits<double>::epsilon() * max_diag;
  bool deficient = false;
  for (int j = 0; j < n; ++j) {
    if (std::abs(a(j, j)) <= tol) deficient = true;
  }
  if (rank_deficient != nullptr) *rank_deficient = deficient;

  // Back substitution R X = B_top.
  Matrix x(n, k);
  for (int c = 0; c < k; ++c) {
    for (int i = n - 1; i >= 0; --i) {
      double s = b(i, c);
      for (int j = i + 1; j < n; ++j) s -= a(i, j) * x(j, c);
      double diag = a(i, i);
      x(i, c) = diag != 0.0 ? s / diag : 0.0;
    }
  }
  return x;
}

}  // namespace weldpred
