#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "t_util.hpp"
#include "weldpred/dataset.hpp"
#include "weldpred/error.hpp"
#include "weldpred/eval.hpp"
#include "weldpred/rng.hpp"

using namespace weldpred;

namespace {

EvalReport report_of(std::string name, int n, std::array<double, 3> acc, std::array<double, 3> mae) {
  EvalReport r;
  r.model_name = std::move(name);
  r.n = n;
  for (int k = 0; k < 3; ++k) {
    r.by_param[k].accuracy = acc[k];
    r.by_param[k].mae = mae[k];
  }
  return r;
}

// Accuracy/MAE figures measured for the four predictors on the reference
// 10-sample evaluation; the expected winners are cnn / svr / mlr.
std::vector<EvalReport> reference_reports() {
  return {
      report_of("mlr", 10, {0.90, 0.70, 0.50}, {30.07, 10.73, 0.26}),
      report_of("svr", 10, {0.20, 0.80, 0.40}, {187.6, 9.08, 0.35}),
      report_of("ann", 10, {0.90, 0.40, 0.40}, {16.25, 15.41, 0.24}),
      report_of("cnn", 10, {1.00, 0.60, 0.30}, {26.2, 11.0, 0.78}),
  };
}

}  // namespace

// ---- mae --------------------------------------------------------------------

TEST_CASE("mae: hand fixtures and validation") {
  std::vector<double> real{100.0, 200.0}, pred{110.0, 190.0};
  CHECK(mae(real, pred) == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(mae(real, real) == 0.0);
  std::vector<double> one{5.0}, empty;
  CHECK(mae(one, std::vector<double>{7.5}) == doctest::Approx(2.5));
  CHECK_THROWS_AS(mae(empty, empty), Error);
  CHECK_THROWS_AS(mae(real, one), Error);
}

TEST_CASE("mae: linear in a common scale factor") {
  Rng rng(1);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> real, pred;
    int n = 1 + static_cast<int>(rng.below(6));
    for (int i = 0; i < n; ++i) {
      real.push_back(rng.uniform(1.0, 1000.0));
      pred.push_back(real.back() * rng.uniform(0.7, 1.3));
    }
    const double c = 3.7;
    std::vector<double> sreal = real, spred = pred;
    for (double& v : sreal) v *= c;
    for (double& v : spred) v *= c;
    CHECK(mae(sreal, spred) == doctest::Approx(c * mae(real, pred)).epsilon(1e-12));
  }
}

// ---- tolerance accuracy ------------------------------------------------------

TEST_CASE("tolerance accuracy: the 15% band boundary is inclusive") {
  std::vector<double> real{100.0};
  CHECK(tolerance_accuracy(real, std::vector<double>{115.0}) == 1.0);
  CHECK(tolerance_accuracy(real, std::vector<double>{85.0}) == 1.0);
  CHECK(tolerance_accuracy(real, std::vector<double>{115.001}) == 0.0);
  CHECK(tolerance_accuracy(real, std::vector<double>{84.999}) == 0.0);
}

TEST_CASE("tolerance accuracy: fraction of in-band predictions") {
  std::vector<double> real{200.0, 400.0}, pred{230.0, 520.0};
  CHECK(tolerance_accuracy(real, pred) == 0.5);  // 30<=30 in, 120>60 out
  CHECK(tolerance_accuracy(real, pred, 0.30) == 1.0);
  CHECK(tolerance_accuracy(real, real, 0.0) == 1.0);  // exact match at tol 0
  CHECK(tolerance_accuracy(real, pred, 0.0) == 0.0);
}

TEST_CASE("tolerance accuracy: validation") {
  std::vector<double> pos{10.0}, with_zero{0.0}, neg{-5.0};
  CHECK_THROWS_AS(tolerance_accuracy(with_zero, pos), Error);
  CHECK_THROWS_AS(tolerance_accuracy(neg, pos), Error);
  CHECK_THROWS_AS(tolerance_accuracy(pos, pos, -0.1), Error);
  std::vector<double> empty;
  CHECK_THROWS_AS(tolerance_accuracy(empty, empty), Error);
  // predictions may be anything, including zero or negative
  CHECK(tolerance_accuracy(pos, std::vector<double>{-3.0}) == 0.0);
}

TEST_CASE("tolerance accuracy: invariant under a common positive rescale") {
  Rng rng(2);
  for (int t = 0; t < 1000; ++t) {
    int n = 1 + static_cast<int>(rng.below(8));
    std::vector<double> real, pred;
    for (int i = 0; i < n; ++i) {
      real.push_back(rng.uniform(1.0, 500.0));
      pred.push_back(real.back() * rng.uniform(0.6, 1.4));
    }
    double base = tolerance_accuracy(real, pred);
    const double c = rng.uniform(0.01, 50.0);
    std::vector<double> sreal = real, spred = pred;
    for (double& v : sreal) v *= c;
    for (double& v : spred) v *= c;
    CHECK(tolerance_accuracy(sreal, spred) == base);
    // cross-check the fraction against a direct count
    std::size_t hits = 0;
    for (int i = 0; i < n; ++i)
      if (std::abs(pred[i] - real[i]) <= 0.15 * real[i]) ++hits;
    CHECK(base == static_cast<double>(hits) / n);
  }
}

// ---- evaluate ----------------------------------------------------------------

TEST_CASE("evaluate: per-parameter scores for a known predictor") {
  Dataset ds;
  Record r1, r2;
  r1.x = WireVector::from_sections(std::vector<double>{1.5, 0.5});
  r1.y = {100.0, 50.0, 1.0};
  r2.x = WireVector::from_sections(std::vector<double>{2.5, 1.0});
  r2.y = {200.0, 60.0, 2.0};
  ds.records = {r1, r2};

  Predictor pred = [](const WireVector& x) -> std::array<double, 3> {
    if (x.sections[0] == 1.5) return {110.0, 40.0, 1.15};
    return {240.0, 60.0, 1.6};
  };
  EvalReport rep = evaluate("toy", pred, ds);
  CHECK(rep.model_name == "toy");
  CHECK(rep.n == 2);
  CHECK(rep.by_param[0].mae == doctest::Approx(25.0));
  CHECK(rep.by_param[0].accuracy == 0.5);  // 10 in, 40 out
  CHECK(rep.by_param[1].mae == doctest::Approx(5.0));
  CHECK(rep.by_param[1].accuracy == 0.5);  // 10 > 7.5 out, exact in
  CHECK(rep.by_param[2].mae == doctest::Approx(0.275));
  CHECK(rep.by_param[2].accuracy == 0.5);  // 0.15 == band edge in, 0.4 out
  CHECK(rep.by_param[0].real == std::vector<double>{100.0, 200.0});
  CHECK(rep.by_param[0].pred == std::vector<double>{110.0, 240.0});

  EvalReport loose = evaluate("toy", pred, ds, 0.5);
  CHECK(loose.by_param[0].accuracy == 1.0);

  Dataset empty;
  CHECK_THROWS_AS(evaluate("toy", pred, empty), Error);
}

// ---- recommend ---------------------------------------------------------------

TEST_CASE("recommend: picks the accuracy winner per parameter") {
  auto reports = reference_reports();
  Recommendation rec = recommend(reports);
  CHECK(rec.by_param[0].model == "cnn");
  CHECK(rec.by_param[0].accuracy == 1.00);
  CHECK(rec.by_param[0].mae == 26.2);
  CHECK(rec.by_param[1].model == "svr");
  CHECK(rec.by_param[1].accuracy == 0.80);
  CHECK(rec.by_param[2].model == "mlr");
  CHECK(rec.by_param[2].mae == 0.26);
}

TEST_CASE("recommend: accuracy ties break toward lower MAE") {
  auto reports = reference_reports();
  reports.erase(reports.begin() + 3);  // drop cnn: energy tie mlr/ann at 0.90
  Recommendation rec = recommend(reports);
  CHECK(rec.by_param[0].model == "ann");  // 16.25 < 30.07
  CHECK(rec.by_param[0].mae == 16.25);
}

TEST_CASE("recommend: full ties break toward the smaller model name") {
  std::vector<EvalReport> reports{
      report_of("zed", 5, {0.8, 0.8, 0.8}, {1.0, 1.0, 1.0}),
      report_of("abc", 5, {0.8, 0.8, 0.8}, {1.0, 1.0, 1.0}),
  };
  Recommendation rec = recommend(reports);
  for (int k = 0; k < 3; ++k) CHECK(rec.by_param[k].model == "abc");
}

TEST_CASE("recommend: invariant to report order") {
  auto reports = reference_reports();
  Recommendation base = recommend(reports);
  std::reverse(reports.begin(), reports.end());
  Recommendation flipped = recommend(reports);
  for (int k = 0; k < 3; ++k) {
    CHECK(base.by_param[k].model == flipped.by_param[k].model);
    CHECK(base.by_param[k].accuracy == flipped.by_param[k].accuracy);
    CHECK(base.by_param[k].mae == flipped.by_param[k].mae);
  }
}

TEST_CASE("recommend: validation") {
  std::vector<EvalReport> empty;
  CHECK_THROWS_AS(recommend(empty), Error);
  std::vector<EvalReport> mismatched{
      report_of("a", 5, {0.5, 0.5, 0.5}, {1, 1, 1}),
      report_of("b", 6, {0.5, 0.5, 0.5}, {1, 1, 1}),
  };
  CHECK_THROWS_AS(recommend(mismatched), Error);
}

// ---- combined predict --------------------------------------------------------

TEST_CASE("combined predict: routes each parameter to its chosen model") {
  Recommendation rec;
  rec.by_param[0] = {"a", 1.0, 0.0};
  rec.by_param[1] = {"b", 1.0, 0.0};
  rec.by_param[2] = {"a", 1.0, 0.0};
  int calls_a = 0, calls_b = 0;
  std::map<std::string, Predictor> models{
      {"a", [&](const WireVector&) -> std::array<double, 3> { ++calls_a; return {1.0, 2.0, 3.0}; }},
      {"b", [&](const WireVector&) -> std::array<double, 3> { ++calls_b; return {10.0, 20.0, 30.0}; }},
  };
  WireVector x = WireVector::from_sections(std::vector<double>{2.5, 1.5});
  auto y = combined_predict(rec, models, x);
  CHECK(y == std::array<double, 3>{1.0, 20.0, 3.0});
  CHECK(calls_a == 1);  // shared across energy and pressure
  CHECK(calls_b == 1);

  // one model everywhere reproduces that model exactly
  Recommendation solo;
  for (int k = 0; k < 3; ++k) solo.by_param[k] = {"b", 1.0, 0.0};
  CHECK(combined_predict(solo, models, x) == std::array<double, 3>{10.0, 20.0, 30.0});

  Recommendation missing;
  for (int k = 0; k < 3; ++k) missing.by_param[k] = {"ghost", 1.0, 0.0};
  try {
    combined_predict(missing, models, x);
    FAIL("expected a lookup failure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_argument);
    CHECK(std::string(e.what()).find("ghost") != std::string::npos);
  }
}

// ---- rendering ---------------------------------------------------------------

TEST_CASE("render comparison: fixed-width table") {
  std::vector<EvalReport> reports{report_of("mlr", 2, {0.883, 1.0, 0.0}, {10.5, 2.25, 0.125})};
  std::string expected =
      "model    energy_mae      acc     ampl_mae      acc    press_mae      acc\n"
      "mlr         10.5000    88.3%       2.2500   100.0%       0.1250     0.0%\n";
  CHECK(render_comparison(reports) == expected);
}

TEST_CASE("render recommendation: aligned arrow list") {
  Recommendation rec;
  rec.by_param[0] = {"mlr", 0.90, 52.5794};
  rec.by_param[1] = {"svr", 0.80, 9.08};
  rec.by_param[2] = {"mlr", 0.50, 0.26};
  std::string expected =
      "recommended per-parameter models:\n"
      "  energy    -> mlr    (accuracy 90.0%, mae 52.5794)\n"
      "  amplitude -> svr    (accuracy 80.0%, mae 9.0800)\n"
      "  pressure  -> mlr    (accuracy 50.0%, mae 0.2600)\n";
  CHECK(render_recommendation(rec) == expected);
}

// ---- CSV writers -------------------------------------------------------------

TEST_CASE("report csv: wide per-record table with residuals") {
  EvalReport rep;
  rep.model_name = "toy";
  rep.n = 2;
  rep.by_param[0] = {.mae = 0, .accuracy = 0, .real = {185.0, 400.0}, .pred = {190.0, 380.0}};
  rep.by_param[1] = {.mae = 0, .accuracy = 0, .real = {60.0, 70.0}, .pred = {60.5, 69.0}};
  rep.by_param[2] = {.mae = 0, .accuracy = 0, .real = {1.75, 2.25}, .pred = {1.75, 2.5}};
  tutil::TempDir tmp;
  write_report_csv(rep, tmp.file("rep.csv"));
  std::string expected =
      "index,real_energy,pred_energy,residual_energy,"
      "real_amplitude,pred_amplitude,residual_amplitude,"
      "real_pressure,pred_pressure,residual_pressure\n"
      "0,185,190,5,60,60.5,0.5,1.75,1.75,0\n"
      "1,400,380,-20,70,69,-1,2.25,2.5,0.25\n";
  CHECK(tutil::read_file(tmp.file("rep.csv")) == expected);
}

TEST_CASE("scatter csv: real, pred, and the tolerance band") {
  EvalReport rep;
  rep.model_name = "toy";
  rep.n = 2;
  rep.by_param[0] = {.mae = 0, .accuracy = 0, .real = {80.0, 200.0}, .pred = {90.0, 230.0}};
  tutil::TempDir tmp;
  write_scatter_csv(rep, Param::energy, tmp.file("sc.csv"));
  // 1.15 * 200 is not exactly representable; the writer keeps the shortest
  // round-trip form of whatever the product actually is
  std::string expected =
      "real,pred,lower,upper\n"
      "80,90,68,92\n"
      "200,230,170,229.99999999999997\n";
  CHECK(tutil::read_file(tmp.file("sc.csv")) == expected);
}

TEST_CASE("csv writers: unwritable paths raise io errors") {
  EvalReport rep;
  rep.n = 1;
  for (int k = 0; k < 3; ++k) {
    rep.by_param[k].real = {1.0};
    rep.by_param[k].pred = {1.0};
  }
  tutil::TempDir tmp;
  CHECK_THROWS_AS(write_report_csv(rep, tmp.path / "no" / "rep.csv"), Error);
  CHECK_THROWS_AS(write_scatter_csv(rep, Param::energy, tmp.path / "no" / "sc.csv"), Error);
}
