#include "weldpred/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "weldpred/error.hpp"

namespace weldpred {

void SvrHyperParams::validate() const {
  if (!std::isfinite(c) || c <= 0.0) throw Error(Errc::invalid_argument, "svr: c must be positive");
  if (!std::isfinite(epsilon) || epsilon < 0.0)
    throw Error(Errc::invalid_argument, "svr: epsilon must be non-negative");
  if (!std::isfinite(gamma) || gamma <= 0.0)
    throw Error(Errc::invalid_argument, "svr: gamma must be positive");
  if (!std::isfinite(kkt_tol) || kkt_tol <= 0.0)
    throw Error(Errc::invalid_argument, "svr: kkt_tol must be positive");
  if (max_passes < 1) throw Error(Errc::invalid_argument, "svr: max_passes must be at least 1");
}

double rbf_kernel(std::span<const double> u, std::span<const double> v, double gamma) {
  if (u.size() != v.size()) throw Error(Errc::invalid_argument, "rbf_kernel: size mismatch");
  double d2 = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

Matrix kernel_matrix(const std::vector<std::array<double, kWireSlots>>& points, double gamma) {
  const int n = static_cast<int>(points.size());
  Matrix k(n, n);
  for (int i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (int j = i + 1; j < n; ++j) k(i, j) = k(j, i) = rbf_kernel(points[i], points[j], gamma);
  }
  return k;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Ascent rate of the dual when moving beta_i up (resp. down); grad = (K beta)_i - y_i.
// -inf marks a move blocked by the box.
double up_rate(double beta, double grad, double eps, double c) {
  if (beta >= c) return -kInf;
  return beta >= 0.0 ? -grad - eps : -grad + eps;
}

double down_rate(double beta, double grad, double eps, double c) {
  if (beta <= -c) return -kInf;
  return beta <= 0.0 ? grad - eps : grad + eps;
}

}  // namespace

SvrDualResult solve_svr_dual(const Matrix& k, std::span<const double> y,
                             const SvrHyperParams& hp) {
  hp.validate();
  const int n = static_cast<int>(y.size());
  if (n < 1 || k.rows != n || k.cols != n)
    throw Error(Errc::invalid_argument, "solve_svr_dual: kernel/label size mismatch");
  for (double v : y)
    if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "solve_svr_dual: non-finite label");

  std::vector<double> beta(n, 0.0);
  std::vector<double> grad(y.begin(), y.end());  // (K beta)_i - y_i, beta = 0
  for (double& g : grad) g = -g;

  SvrDualResult res;
  res.beta.resize(n);
  res.objective_history.push_back(0.0);  // D(0) = 0

  auto objective = [&] {
    double d = 0.0;
    for (int i = 0; i < n; ++i)
      d += beta[i] * (0.5 * (y[i] - grad[i])) - hp.epsilon * std::abs(beta[i]);
    return d;
  };

  double max_up = -kInf, max_down = -kInf;
  int arg_up = -1;
  auto scan = [&] {
    max_up = max_down = -kInf;
    arg_up = -1;
    for (int i = 0; i < n; ++i) {
      const double u = up_rate(beta[i], grad[i], hp.epsilon, hp.c);
      if (u > max_up) {
        max_up = u;
        arg_up = i;
      }
      max_down = std::max(max_down, down_rate(beta[i], grad[i], hp.epsilon, hp.c));
    }
  };

  while (res.passes < hp.max_passes) {
    scan();
    res.kkt_violation = max_up + max_down;
    if (res.kkt_violation <= hp.kkt_tol) {
      res.converged = true;
      break;
    }

    // maximal violator i, partner j by estimated quadratic gain
    const int i = arg_up;
    int j = -1;
    double best_gain = 0.0;
    for (int t = 0; t < n; ++t) {
      if (t == i) continue;
      const double dn = down_rate(beta[t], grad[t], hp.epsilon, hp.c);
      const double slope0 = max_up + dn;
      if (slope0 <= 0.0) continue;
      double eta = k(i, i) + k(t, t) - 2.0 * k(i, t);
      if (eta < 1e-12) eta = 1e-12;
      const double gain = slope0 * slope0 / (2.0 * eta);
      if (gain > best_gain) {
        best_gain = gain;
        j = t;
      }
    }
    if (j < 0) {  // no ascent pair despite the certificate gap; numerically stuck
      res.converged = false;
      break;
    }

    // Exact line search along (+t, -t) for (beta_i, beta_j). The objective is
    // piecewise quadratic in t: slope starts at up+down, decays at rate eta,
    // and drops by 2*eps whenever a beta crosses zero.
    const double bi = beta[i], bj = beta[j];
    const double box = std::min(hp.c - bi, bj + hp.c);
    const double eta = std::max(k(i, i) + k(j, j) - 2.0 * k(i, j), 0.0);
    double slope = up_rate(bi, grad[i], hp.epsilon, hp.c) +
                   down_rate(bj, grad[j], hp.epsilon, hp.c);
    double kinks[2] = {bi < 0.0 ? -bi : kInf, bj > 0.0 ? bj : kInf};
    if (kinks[0] > kinks[1]) std::swap(kinks[0], kinks[1]);

    double t_cur = 0.0, t_star = box;
    int next_kink = 0;
    while (true) {
      if (slope <= 0.0) {
        t_star = t_cur;
        break;
      }
      const double end = next_kink < 2 ? std::min(kinks[next_kink], box) : box;
      const double len = end - t_cur;
      if (eta > 0.0 && slope < eta * len) {
        t_star = t_cur + slope / eta;
        break;
      }
      slope -= eta * len;
      t_cur = end;
      if (t_cur >= box) {
        t_star = box;
        break;
      }
      slope -= 2.0 * hp.epsilon;  // a beta crosses zero here
      ++next_kink;
    }

    const double t = t_star;
    double nbi = bi + t, nbj = bj - t;
    if (t == hp.c - bi) nbi = hp.c;  // land exactly on the box / on zero
    if (t == bj + hp.c) nbj = -hp.c;
    if (bi < 0.0 && t == -bi) nbi = 0.0;
    if (bj > 0.0 && t == bj) nbj = 0.0;
    beta[i] = std::clamp(nbi, -hp.c, hp.c);
    beta[j] = std::clamp(nbj, -hp.c, hp.c);
    for (int r = 0; r < n; ++r) grad[r] += t * (k(r, i) - k(r, j));

    ++res.passes;
    res.objective_history.push_back(objective());
  }

  if (!res.converged) {
    scan();
    res.kkt_violation = max_up + max_down;
  }

  // bias: average the implied multiplier over unbounded support vectors,
  // else the midpoint of the (near-)feasible interval
  double sum = 0.0;
  int cnt = 0;
  for (int i = 0; i < n; ++i) {
    if (beta[i] == 0.0 || std::abs(beta[i]) >= hp.c) continue;
    sum += beta[i] > 0.0 ? -grad[i] - hp.epsilon : -grad[i] + hp.epsilon;
    ++cnt;
  }
  res.bias = cnt > 0 ? sum / cnt : 0.5 * (max_up - max_down);
  res.beta = std::move(beta);
  return res;
}

namespace {

void standardize_columns(const Dataset& train, std::array<double, kWireSlots>& mean,
                         std::array<double, kWireSlots>& scale) {
  const double n = static_cast<double>(train.size());
  for (int j = 0; j < kWireSlots; ++j) {
    double mu = 0.0;
    for (const Record& r : train.records) mu += r.x.sections[j];
    mu /= n;
    double var = 0.0;
    for (const Record& r : train.records) {
      const double d = r.x.sections[j] - mu;
      var += d * d;
    }
    var /= n;
    mean[j] = mu;
    scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
}

}  // namespace

SvrModel fit_svr(const Dataset& train, const SvrHyperParams& hp) {
  hp.validate();
  if (train.size() < 2)
    throw Error(Errc::invalid_argument, "svr needs at least 2 training records");
  const int n = static_cast<int>(train.size());

  SvrModel m;
  m.hp = hp;
  standardize_columns(train, m.input_mean, m.input_scale);
  m.sv.resize(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < kWireSlots; ++j)
      m.sv[i][j] = (train.records[i].x.sections[j] - m.input_mean[j]) / m.input_scale[j];

  const Matrix k = kernel_matrix(m.sv, hp.gamma);
  for (int p = 0; p < 3; ++p) {
    double mu = 0.0;
    for (const Record& r : train.records) mu += r.y.as_array()[p];
    mu /= n;
    double var = 0.0;
    for (const Record& r : train.records) {
      const double d = r.y.as_array()[p] - mu;
      var += d * d;
    }
    var /= n;
    m.y_mean[p] = mu;
    m.y_scale[p] = var > 0.0 ? std::sqrt(var) : 1.0;

    std::vector<double> ys(n);
    for (int i = 0; i < n; ++i) ys[i] = (train.records[i].y.as_array()[p] - mu) / m.y_scale[p];
    SvrDualResult r = solve_svr_dual(k, ys, hp);
    m.outputs[p] = {std::move(r.beta), r.bias, r.converged, r.passes, r.kkt_violation};
  }
  return m;
}

std::array<double, 3> SvrModel::predict(std::span<const double> x) const {
  if (x.size() != kWireSlots)
    throw Error(Errc::invalid_argument, "predict expects 16 wire sections");
  std::array<double, kWireSlots> z;
  for (int j = 0; j < kWireSlots; ++j) {
    if (!std::isfinite(x[j])) throw Error(Errc::invalid_argument, "non-finite input");
    z[j] = (x[j] - input_mean[j]) / input_scale[j];
  }
  std::array<double, 3> acc{};
  for (std::size_t i = 0; i < sv.size(); ++i) {
    const double kv = rbf_kernel(sv[i], z, hp.gamma);
    for (int p = 0; p < 3; ++p) acc[p] += outputs[p].beta[i] * kv;
  }
  std::array<double, 3> out;
  for (int p = 0; p < 3; ++p) out[p] = (acc[p] + outputs[p].bias) * y_scale[p] + y_mean[p];
  return out;
}

}  // namespace weldpred
