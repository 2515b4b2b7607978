#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

using weldpred::Matrix;

namespace oracle {

Matrix gauss_solve(Matrix a, Matrix b) {
  const int n = a.rows;
  if (a.cols != n || b.rows != n) throw std::invalid_argument("gauss_solve: shape mismatch");
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (std::abs(a(pivot, col)) < 1e-14) throw std::runtime_error("gauss_solve: singular matrix");
    if (pivot != col) {
      for (int c = 0; c < n; ++c) std::swap(a(col, c), a(pivot, c));
      for (int c = 0; c < b.cols; ++c) std::swap(b(col, c), b(pivot, c));
    }
    for (int r = col + 1; r < n; ++r) {
      double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      for (int c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      for (int c = 0; c < b.cols; ++c) b(r, c) -= f * b(col, c);
    }
  }
  Matrix w(n, b.cols);
  for (int c = 0; c < b.cols; ++c)
    for (int r = n - 1; r >= 0; --r) {
      double s = b(r, c);
      for (int j = r + 1; j < n; ++j) s -= a(r, j) * w(j, c);
      w(r, c) = s / a(r, r);
    }
  return w;
}

Matrix normal_equations(const Matrix& x, const Matrix& y) {
  const int m = x.rows, p = x.cols, q = y.cols;
  if (y.rows != m) throw std::invalid_argument("normal_equations: row mismatch");
  Matrix xtx(p, p), xty(p, q);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      double s = 0.0;
      for (int r = 0; r < m; ++r) s += x(r, i) * x(r, j);
      xtx(i, j) = s;
    }
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < q; ++j) {
      double s = 0.0;
      for (int r = 0; r < m; ++r) s += x(r, i) * y(r, j);
      xty(i, j) = s;
    }
  return gauss_solve(std::move(xtx), std::move(xty));
}

double svr_dual_objective(const Matrix& k, const std::vector<double>& y, double /*c*/,
                          double epsilon, const std::vector<double>& beta) {
  const int n = static_cast<int>(beta.size());
  double quad = 0.0, lin = 0.0;
  for (int i = 0; i < n; ++i) {
    double ki = 0.0;
    for (int j = 0; j < n; ++j) ki += k(i, j) * beta[j];
    quad += beta[i] * ki;
    lin += y[i] * beta[i] - epsilon * std::abs(beta[i]);
  }
  return -0.5 * quad + lin;
}

namespace {

// Projection of v onto { z in [0,C]^{2n} : sum_{i<n} z_i - sum_{i>=n} z_i = 0 }
// via bisection on the shift multiplier.
void project_split(std::vector<double>& v, double c) {
  const int m = static_cast<int>(v.size());
  const int n = m / 2;
  auto balance = [&](double lam) {
    // z_i = clamp(v_i - lam * a_i), a_i = +1 for alpha, -1 for alpha*
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::clamp(v[i] - lam, 0.0, c);
    for (int i = n; i < m; ++i) s -= std::clamp(v[i] + lam, 0.0, c);
    return s;
  };
  double lo = -1.0, hi = 1.0;
  for (double x : v) {
    lo = std::min(lo, -std::abs(x) - c - 1.0);
    hi = std::max(hi, std::abs(x) + c + 1.0);
  }
  // balance() is nonincreasing in lambda
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (balance(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  double lam = 0.5 * (lo + hi);
  for (int i = 0; i < n; ++i) v[i] = std::clamp(v[i] - lam, 0.0, c);
  for (int i = n; i < m; ++i) v[i] = std::clamp(v[i] + lam, 0.0, c);
}

std::vector<double> to_beta(const std::vector<double>& z) {
  const int n = static_cast<int>(z.size()) / 2;
  std::vector<double> beta(n);
  for (int i = 0; i < n; ++i) beta[i] = z[i] - z[i + n];
  return beta;
}

// Gradient of the smooth split objective
//   F(z) = -1/2 (a-a*)'K(a-a*) - eps * sum(a+a*) + y'(a-a*)
void split_gradient(const Matrix& k, const std::vector<double>& y, double epsilon,
                    const std::vector<double>& z, std::vector<double>& grad) {
  const int n = static_cast<int>(y.size());
  std::vector<double> kb(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += k(i, j) * (z[j] - z[j + n]);
    kb[i] = s;
  }
  for (int i = 0; i < n; ++i) {
    grad[i] = -kb[i] - epsilon + y[i];
    grad[i + n] = kb[i] - epsilon - y[i];
  }
}

// Exact solve on the active set detected from the PG solution. Free betas get
//   (K beta)_i + eps*sign(beta_i) - y_i + lambda = 0,  sum beta = 0.
// Returns false when the pattern is infeasible or KKT checks fail.
bool polish(const Matrix& k, const std::vector<double>& y, double c, double epsilon,
            std::vector<double>& beta) {
  const int n = static_cast<int>(y.size());
  const double bound_tol = 1e-6 * c, zero_tol = 1e-8 * c;
  std::vector<int> free_idx;
  std::vector<double> fixed(n, 0.0);
  std::vector<int> kindv(n, 0);  // 0 zero, 1 free, 2 bound
  for (int i = 0; i < n; ++i) {
    double b = beta[i];
    if (std::abs(b) <= zero_tol) {
      kindv[i] = 0;
    } else if (b >= c - bound_tol) {
      kindv[i] = 2;
      fixed[i] = c;
    } else if (b <= -c + bound_tol) {
      kindv[i] = 2;
      fixed[i] = -c;
    } else {
      kindv[i] = 1;
      free_idx.push_back(i);
    }
  }
  const int f = static_cast<int>(free_idx.size());
  std::vector<double> out(n, 0.0);
  double lambda = 0.0;
  if (f == 0) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += fixed[i];
    if (std::abs(s) > 1e-9 * std::max(1.0, c)) return false;
    out = fixed;
    // lambda must make every zero/bound condition hold; estimate from the
    // tightest constraints below using the midpoint of the admissible range.
    double lo = -1e300, hi = 1e300;
    for (int i = 0; i < n; ++i) {
      double kb = 0.0;
      for (int j = 0; j < n; ++j) kb += k(i, j) * out[j];
      double g = y[i] - kb;  // lambda ~ g -/+ eps
      if (kindv[i] == 0) {
        lo = std::max(lo, g - epsilon);
        hi = std::min(hi, g + epsilon);
      } else if (fixed[i] > 0.0) {
        hi = std::min(hi, g - epsilon);
      } else {
        lo = std::max(lo, g + epsilon);
      }
    }
    if (lo > hi + 1e-7) return false;
    lambda = std::clamp(0.5 * (lo + hi), std::min(lo, hi), std::max(lo, hi));
    (void)lambda;
    beta = out;
    return true;
  }
  Matrix a(f + 1, f + 1), rhs(f + 1, 1);
  for (int r = 0; r < f; ++r) {
    int i = free_idx[r];
    for (int cidx = 0; cidx < f; ++cidx) a(r, cidx) = k(i, free_idx[cidx]);
    a(r, f) = 1.0;
    double kfix = 0.0;
    for (int j = 0; j < n; ++j)
      if (kindv[j] == 2) kfix += k(i, j) * fixed[j];
    double sign = beta[i] > 0.0 ? 1.0 : -1.0;
    rhs(r, 0) = y[i] - epsilon * sign - kfix;
  }
  double fixed_sum = 0.0;
  for (int j = 0; j < n; ++j) fixed_sum += fixed[j];
  for (int cidx = 0; cidx < f; ++cidx) a(f, cidx) = 1.0;
  a(f, f) = 0.0;
  rhs(f, 0) = -fixed_sum;
  Matrix sol(0, 0);
  try {
    sol = gauss_solve(std::move(a), std::move(rhs));
  } catch (const std::exception&) {
    return false;
  }
  for (int r = 0; r < f; ++r) {
    int i = free_idx[r];
    double b = sol(r, 0);
    double sign = beta[i] > 0.0 ? 1.0 : -1.0;
    if (b * sign <= 0.0 || std::abs(b) >= c) return false;  // pattern broken
    out[i] = b;
  }
  for (int j = 0; j < n; ++j)
    if (kindv[j] == 2) out[j] = fixed[j];
  lambda = sol(f, 0);
  // KKT verification at a tight tolerance
  for (int i = 0; i < n; ++i) {
    double kb = 0.0;
    for (int j = 0; j < n; ++j) kb += k(i, j) * out[j];
    double g = y[i] - kb - lambda;  // in [-eps, eps] when beta_i = 0
    if (kindv[i] == 0) {
      if (std::abs(g) > epsilon + 1e-7) return false;
    } else if (out[i] > 0.0 && out[i] < c) {
      if (std::abs(g - epsilon) > 1e-7) return false;
    } else if (out[i] < 0.0 && out[i] > -c) {
      if (std::abs(g + epsilon) > 1e-7) return false;
    } else if (out[i] >= c) {
      if (g < epsilon - 1e-7) return false;
    } else {
      if (g > -epsilon + 1e-7) return false;
    }
  }
  beta = out;
  return true;
}

}  // namespace

SvrOracleResult svr_dual_pg(const Matrix& k, const std::vector<double>& y, double c,
                            double epsilon, int max_iters, double tol) {
  const int n = static_cast<int>(y.size());
  const int m = 2 * n;
  // Lipschitz bound for the split Hessian [[K,-K],[-K,K]]: 2 * max row sum.
  double row = 0.0;
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += std::abs(k(i, j));
    row = std::max(row, s);
  }
  const double step = 1.0 / std::max(1e-8, 2.0 * row);

  std::vector<double> z(m, 0.0), z_prev(m, 0.0), look(m, 0.0), grad(m, 0.0);
  project_split(z, c);
  z_prev = z;
  double t_acc = 1.0;
  double best_obj = svr_dual_objective(k, y, c, epsilon, to_beta(z));
  std::vector<double> best = to_beta(z);
  int it = 0;
  for (; it < max_iters; ++it) {
    // Nesterov lookahead with restart on non-ascent
    double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_acc * t_acc));
    double mom = (t_acc - 1.0) / t_next;
    for (int i = 0; i < m; ++i) look[i] = z[i] + mom * (z[i] - z_prev[i]);
    for (double& v : look) v = std::clamp(v, 0.0, c);
    split_gradient(k, y, epsilon, look, grad);
    z_prev = z;
    for (int i = 0; i < m; ++i) z[i] = look[i] + step * grad[i];
    project_split(z, c);
    t_acc = t_next;

    if (it % 32 == 0) {
      double obj = svr_dual_objective(k, y, c, epsilon, to_beta(z));
      if (obj < best_obj - 1e-12) {
        t_acc = 1.0;  // restart momentum
        z = z_prev;
      } else {
        double gain = obj - best_obj;
        if (obj > best_obj) {
          best_obj = obj;
          best = to_beta(z);
        }
        if (it > 256 && gain < tol) break;
      }
    }
  }
  std::vector<double> polished = best;
  if (polish(k, y, c, epsilon, polished)) {
    double obj = svr_dual_objective(k, y, c, epsilon, polished);
    if (obj >= best_obj - 1e-9) {
      best = polished;
      best_obj = obj;
    }
  }
  return {best, best_obj, it};
}

std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> x, double h) {
  std::vector<double> g(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    double keep = x[i];
    x[i] = keep + h;
    double fp = f(x);
    x[i] = keep - h;
    double fm = f(x);
    x[i] = keep;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

double max_rel_err(const std::vector<double>& a, const std::vector<double>& b,
                   double floor_val) {
  if (a.size() != b.size()) throw std::invalid_argument("max_rel_err: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double denom = std::max({floor_val, std::abs(a[i]), std::abs(b[i])});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace oracle
