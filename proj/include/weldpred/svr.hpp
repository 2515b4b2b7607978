#pragma once

#include <array>
#include <span>
#include <vector>

#include "weldpred/dataset.hpp"
#include "weldpred/matrix.hpp"

namespace weldpred {

struct SvrHyperParams {
  double c = 35.0;
  double epsilon = 0.1;   // tube half-width, standardized target units
  double gamma = 0.025;   // RBF width, standardized input space
  double kkt_tol = 1e-3;
  int max_passes = 10000;  // one pass = one working-pair update

  void validate() const;
};

double rbf_kernel(std::span<const double> u, std::span<const double> v, double gamma);

/// Gram matrix of the RBF kernel over a point set (rows = points).
Matrix kernel_matrix(const std::vector<std::array<double, kWireSlots>>& points, double gamma);

/// Outcome of one dual solve: maximize
///   -1/2 ΣΣ β_i β_j K_ij - ε Σ|β_i| + Σ y_i β_i
/// subject to Σβ_i = 0 and |β_i| ≤ C, by pairwise coordinate ascent.
struct SvrDualResult {
  std::vector<double> beta;
  double bias = 0.0;
  int passes = 0;
  double kkt_violation = 0.0;            // final maximal certificate gap
  bool converged = false;                // violation ≤ kkt_tol within max_passes
  std::vector<double> objective_history;  // [initial, after pass 1, ...]
};

/// Pairwise SMO-style ascent: the maximal KKT violator is paired with the
/// point of maximal estimated objective gain (deterministic ties → lowest
/// index), stepped by an exact piecewise-quadratic line search. Feasibility
/// holds after every update; the objective never decreases.
SvrDualResult solve_svr_dual(const Matrix& k, std::span<const double> y,
                             const SvrHyperParams& hp);

struct SvrOutput {
  std::vector<double> beta;  // one per retained training point
  double bias = 0.0;
  bool converged = false;
  int passes = 0;
  double kkt_violation = 0.0;
};

/// Three independent tubes (energy, amplitude, pressure) over one shared
/// kernel; inputs and targets standardized internally.
struct SvrModel {
  SvrHyperParams hp;
  std::array<double, kWireSlots> input_mean{};
  std::array<double, kWireSlots> input_scale{};
  std::array<double, 3> y_mean{};
  std::array<double, 3> y_scale{};
  std::vector<std::array<double, kWireSlots>> sv;  // standardized training inputs
  std::array<SvrOutput, 3> outputs;

  std::array<double, 3> predict(std::span<const double> x) const;
  std::array<double, 3> predict(const WireVector& x) const { return predict(x.sections); }
};

SvrModel fit_svr(const Dataset& train, const SvrHyperParams& hp);

}  // namespace weldpred
