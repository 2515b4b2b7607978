#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "weldpred/dataset.hpp"

namespace weldpred {

double mae(std::span<const double> real, std::span<const double> pred);

/// Fraction of predictions with |pred - real| <= tol * real (boundary counts
/// as inside). Every real value must be positive.
double tolerance_accuracy(std::span<const double> real, std::span<const double> pred,
                          double tol = 0.15);

struct ParamEval {
  double mae = 0.0;
  double accuracy = 0.0;
  std::vector<double> real;  // per-record, test order
  std::vector<double> pred;
};

struct EvalReport {
  std::string model_name;
  int n = 0;
  std::array<ParamEval, 3> by_param;  // indexed by Param
};

using Predictor = std::function<std::array<double, 3>(const WireVector&)>;

EvalReport evaluate(const std::string& model_name, const Predictor& predict, const Dataset& test,
                    double tol = 0.15);

struct Choice {
  std::string model;
  double accuracy = 0.0;
  double mae = 0.0;
};

/// Per parameter: the report with maximal accuracy; ties broken by minimal
/// MAE, then lexicographically smallest model name.
struct Recommendation {
  std::array<Choice, 3> by_param;
};

Recommendation recommend(std::span<const EvalReport> reports);

/// Energy from the energy-recommended model, amplitude and pressure likewise.
std::array<double, 3> combined_predict(const Recommendation& rec,
                                       const std::map<std::string, Predictor>& models,
                                       const WireVector& x);

std::string render_comparison(std::span<const EvalReport> reports);
std::string render_recommendation(const Recommendation& rec);

/// Wide per-record CSV: real, predicted, and residual for each parameter.
void write_report_csv(const EvalReport& report, const std::filesystem::path& path);

/// Scatter data for one parameter: real, pred, 0.85*real, 1.15*real per row.
void write_scatter_csv(const EvalReport& report, Param p, const std::filesystem::path& path);

}  // namespace weldpred
