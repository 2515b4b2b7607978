#include "weldpred/linear_model.hpp"

#include <cmath>

#include "weldpred/error.hpp"

namespace weldpred {

std::array<double, 3> LinearModel::predict(std::span<const double> x) const {
  if (x.size() != kWireSlots)
    throw Error(Errc::invalid_argument, "predict expects 16 wire sections");
  for (double v : x)
    if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "non-finite input");
  std::array<double, 3> out = intercept;
  for (int j = 0; j < kWireSlots; ++j) {
    const double z = (x[j] - input_mean[j]) / input_scale[j];
    for (int k = 0; k < 3; ++k) out[k] += weights(j, k) * z;
  }
  return out;
}

Matrix LinearModel::raw_weights() const {
  Matrix w(kWireSlots, 3);
  for (int j = 0; j < kWireSlots; ++j)
    for (int k = 0; k < 3; ++k) w(j, k) = weights(j, k) / input_scale[j];
  return w;
}

std::array<double, 3> LinearModel::raw_intercept() const {
  std::array<double, 3> b = intercept;
  for (int j = 0; j < kWireSlots; ++j)
    for (int k = 0; k < 3; ++k) b[k] -= weights(j, k) * input_mean[j] / input_scale[j];
  return b;
}

LinearModel fit_mlr(const Dataset& train) {
  if (train.empty()) throw Error(Errc::invalid_argument, "cannot fit on an empty dataset");
  const int m = static_cast<int>(train.size());

  LinearModel model;
  model.weights = Matrix(kWireSlots, 3);

  // input standardization; constant features keep scale 1 and weight 0
  for (int j = 0; j < kWireSlots; ++j) {
    double mu = 0.0;
    for (const Record& r : train.records) mu += r.x.sections[j];
    mu /= m;
    double var = 0.0;
    for (const Record& r : train.records) {
      const double d = r.x.sections[j] - mu;
      var += d * d;
    }
    var /= m;
    model.input_mean[j] = mu;
    model.input_scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  std::vector<int> active;  // columns that actually vary
  for (int j = 0; j < kWireSlots; ++j) {
    bool constant = true;
    for (const Record& r : train.records)
      if (r.x.sections[j] != train.records.front().x.sections[j]) {
        constant = false;
        break;
      }
    if (!constant) active.push_back(j);
  }

  // centered targets; intercept = label means (standardized columns are centered)
  std::array<double, 3> y_mean{};
  for (const Record& r : train.records) {
    const auto y = r.y.as_array();
    for (int k = 0; k < 3; ++k) y_mean[k] += y[k];
  }
  for (int k = 0; k < 3; ++k) y_mean[k] /= m;
  model.intercept = y_mean;
  if (active.empty()) return model;

  const int p = static_cast<int>(active.size());
  Matrix z(m, p);
  Matrix yc(m, 3);
  for (int i = 0; i < m; ++i) {
    const Record& r = train.records[i];
    for (int jj = 0; jj < p; ++jj) {
      const int j = active[jj];
      z(i, jj) = (r.x.sections[j] - model.input_mean[j]) / model.input_scale[j];
    }
    const auto y = r.y.as_array();
    for (int k = 0; k < 3; ++k) yc(i, k) = y[k] - y_mean[k];
  }

  Matrix w;
  bool deficient = m < p;  // QR needs rows >= cols; short designs go straight to ridge
  if (!deficient) w = qr_least_squares(z, yc, &deficient);
  if (deficient) {
    double trace = 0.0;
    for (double v : z.a) trace += v * v;
    const double lambda = 1e-8 * trace / kWireSlots;
    Matrix za(m + p, p);
    Matrix ya(m + p, 3);
    for (int i = 0; i < m; ++i) {
      for (int jj = 0; jj < p; ++jj) za(i, jj) = z(i, jj);
      for (int k = 0; k < 3; ++k) ya(i, k) = yc(i, k);
    }
    const double root = std::sqrt(lambda);
    for (int jj = 0; jj < p; ++jj) za(m + jj, jj) = root;
    w = qr_least_squares(za, ya);
    model.ridge_used = true;
  }

  for (int jj = 0; jj < p; ++jj)
    for (int k = 0; k < 3; ++k) model.weights(active[jj], k) = w(jj, k);
  for (double v : model.weights.a)
    if (!std::isfinite(v)) throw Error(Errc::training, "linear fit produced non-finite weights");
  return model;
}

}  // namespace weldpred
