#pragma once

#include <array>
#include <span>

#include "weldpred/dataset.hpp"
#include "weldpred/matrix.hpp"

namespace weldpred {

/// Multi-output linear regression: one joint least-squares fit over all three
/// parameters. Coefficients live in standardized input space; predict applies
/// the stored standardization.
struct LinearModel {
  std::array<double, kWireSlots> input_mean{};
  std::array<double, kWireSlots> input_scale{};  // 1.0 for constant features
  Matrix weights;                                // 16 x 3, standardized space
  std::array<double, 3> intercept{};             // == per-output label means
  bool ridge_used = false;

  /// Unclamped estimate (energy, amplitude, pressure); x must have 16 entries.
  std::array<double, 3> predict(std::span<const double> x) const;
  std::array<double, 3> predict(const WireVector& x) const { return predict(x.sections); }

  /// Coefficients expressed on raw (unstandardized) inputs, for inspection.
  Matrix raw_weights() const;
  std::array<double, 3> raw_intercept() const;
};

/// Least-squares minimizer of sum ||y - Wᵀz - b||² over the training set,
/// solved by Householder QR with three shared right-hand sides; falls back to
/// a small ridge term when the standardized design is rank-deficient.
LinearModel fit_mlr(const Dataset& train);

}  // namespace weldpred
