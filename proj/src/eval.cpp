#include "weldpred/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "weldpred/error.hpp"
#include "text_util.hpp"

namespace weldpred {

using detail::shortest;

double mae(std::span<const double> real, std::span<const double> pred) {
  if (real.empty() || real.size() != pred.size())
    throw Error(Errc::invalid_argument, "mae: lists must be nonempty and equal-length");
  double s = 0.0;
  for (std::size_t i = 0; i < real.size(); ++i) s += std::abs(pred[i] - real[i]);
  return s / real.size();
}

double tolerance_accuracy(std::span<const double> real, std::span<const double> pred, double tol) {
  if (real.empty() || real.size() != pred.size())
    throw Error(Errc::invalid_argument, "tolerance_accuracy: lists must be nonempty and equal-length");
  if (!std::isfinite(tol) || tol < 0.0)
    throw Error(Errc::invalid_argument, "tolerance_accuracy: tol must be non-negative");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < real.size(); ++i) {
    if (!(real[i] > 0.0))
      throw Error(Errc::invalid_argument,
                  "tolerance_accuracy: real values must be positive (relative band)");
    if (std::abs(pred[i] - real[i]) <= tol * real[i]) ++hits;
  }
  return static_cast<double>(hits) / real.size();
}

EvalReport evaluate(const std::string& model_name, const Predictor& predict, const Dataset& test,
                    double tol) {
  if (test.empty()) throw Error(Errc::invalid_argument, "evaluate: empty test set");
  EvalReport rep;
  rep.model_name = model_name;
  rep.n = static_cast<int>(test.size());
  for (const Record& r : test.records) {
    const std::array<double, 3> y = predict(r.x);
    const std::array<double, 3> t = r.y.as_array();
    for (int k = 0; k < 3; ++k) {
      rep.by_param[k].real.push_back(t[k]);
      rep.by_param[k].pred.push_back(y[k]);
    }
  }
  for (int k = 0; k < 3; ++k) {
    rep.by_param[k].mae = mae(rep.by_param[k].real, rep.by_param[k].pred);
    rep.by_param[k].accuracy = tolerance_accuracy(rep.by_param[k].real, rep.by_param[k].pred, tol);
  }
  return rep;
}

Recommendation recommend(std::span<const EvalReport> reports) {
  if (reports.empty()) throw Error(Errc::invalid_argument, "recommend: no reports");
  for (const EvalReport& r : reports)
    if (r.n != reports.front().n)
      throw Error(Errc::invalid_argument, "recommend: reports cover different test sizes");

  Recommendation rec;
  for (int k = 0; k < 3; ++k) {
    const EvalReport* best = nullptr;
    for (const EvalReport& r : reports) {
      if (!best) {
        best = &r;
        continue;
      }
      const ParamEval& a = r.by_param[k];
      const ParamEval& b = best->by_param[k];
      const bool better = a.accuracy > b.accuracy ||
                          (a.accuracy == b.accuracy &&
                           (a.mae < b.mae || (a.mae == b.mae && r.model_name < best->model_name)));
      if (better) best = &r;
    }
    rec.by_param[k] = {best->model_name, best->by_param[k].accuracy, best->by_param[k].mae};
  }
  return rec;
}

std::array<double, 3> combined_predict(const Recommendation& rec,
                                       const std::map<std::string, Predictor>& models,
                                       const WireVector& x) {
  std::map<std::string, std::array<double, 3>> cache;
  std::array<double, 3> out{};
  for (int k = 0; k < 3; ++k) {
    const std::string& name = rec.by_param[k].model;
    auto hit = cache.find(name);
    if (hit == cache.end()) {
      auto model = models.find(name);
      if (model == models.end())
        throw Error(Errc::invalid_argument, "combined_predict: no model named \"" + name + "\"");
      hit = cache.emplace(name, model->second(x)).first;
    }
    out[k] = hit->second[k];
  }
  return out;
}

std::string render_comparison(std::span<const EvalReport> reports) {
  char line[160];
  std::ostringstream os;
  std::snprintf(line, sizeof line, "%-6s %12s %8s %12s %8s %12s %8s\n", "model", "energy_mae",
                "acc", "ampl_mae", "acc", "press_mae", "acc");
  os << line;
  for (const EvalReport& r : reports) {
    std::snprintf(line, sizeof line, "%-6s %12.4f %7.1f%% %12.4f %7.1f%% %12.4f %7.1f%%\n",
                  r.model_name.c_str(), r.by_param[0].mae, 100.0 * r.by_param[0].accuracy,
                  r.by_param[1].mae, 100.0 * r.by_param[1].accuracy, r.by_param[2].mae,
                  100.0 * r.by_param[2].accuracy);
    os << line;
  }
  return os.str();
}

std::string render_recommendation(const Recommendation& rec) {
  char line[160];
  std::ostringstream os;
  os << "recommended per-parameter models:\n";
  for (int k = 0; k < 3; ++k) {
    const Choice& c = rec.by_param[k];
    std::snprintf(line, sizeof line, "  %-9s -> %-6s (accuracy %.1f%%, mae %.4f)\n",
                  param_name(static_cast<Param>(k)), c.model.c_str(), 100.0 * c.accuracy, c.mae);
    os << line;
  }
  return os.str();
}

void write_report_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << "index";
  for (int k = 0; k < 3; ++k) {
    const char* p = param_name(static_cast<Param>(k));
    out << ",real_" << p << ",pred_" << p << ",residual_" << p;
  }
  out << '\n';
  for (int i = 0; i < report.n; ++i) {
    out << i;
    for (int k = 0; k < 3; ++k) {
      const ParamEval& pe = report.by_param[k];
      out << ',' << shortest(pe.real[i]) << ',' << shortest(pe.pred[i]) << ','
          << shortest(pe.pred[i] - pe.real[i]);
    }
    out << '\n';
  }
  if (!out) throw Error(Errc::io, "write failed for " + path.string());
}

void write_scatter_csv(const EvalReport& report, Param p, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << "real,pred,lower,upper\n";
  const ParamEval& pe = report.by_param[static_cast<int>(p)];
  for (std::size_t i = 0; i < pe.real.size(); ++i)
    out << shortest(pe.real[i]) << ',' << shortest(pe.pred[i]) << ','
        << shortest(0.85 * pe.real[i]) << ',' << shortest(1.15 * pe.real[i]) << '\n';
  if (!out) throw Error(Errc::io, "write failed for " + path.string());
}

}  // namespace weldpred
