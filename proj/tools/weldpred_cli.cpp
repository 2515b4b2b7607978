// weldpred command-line front end. Talks to the library strictly through the
// C interface in weldpred.h; everything here is argument plumbing, config
// merging and output formatting.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "weldpred.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Fail {
  int code;
  std::string msg;
};

void check(wp_status st) {
  if (st != WP_OK) throw Fail{1, wp_last_error()};
}

// For failures caused by user-supplied values (flags, config, inline input):
// invalid-argument rejections count as usage errors.
void check_input(wp_status st) {
  if (st == WP_OK) return;
  throw Fail{st == WP_E_INVALID_ARGUMENT ? 2 : 1, wp_last_error()};
}

[[noreturn]] void usage_fail(const std::string& msg) { throw Fail{2, msg}; }

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  ~Handle() { reset(); }
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& o) noexcept : p(o.p) { o.p = nullptr; }
  Handle& operator=(Handle&& o) noexcept {
    if (this != &o) {
      reset();
      p = o.p;
      o.p = nullptr;
    }
    return *this;
  }
  void reset() {
    if (p) Free(p);
    p = nullptr;
  }
  T** out() {
    reset();
    return &p;
  }
  T* get() const { return p; }
};

using DatasetH = Handle<wp_dataset, wp_dataset_free>;
using InputsH = Handle<wp_inputs, wp_inputs_free>;
using ModelH = Handle<wp_model, wp_model_free>;
using ReportH = Handle<wp_report, wp_report_free>;
using RecommendationH = Handle<wp_recommendation, wp_recommendation_free>;

struct CStr {
  char* p = nullptr;
  ~CStr() { wp_string_free(p); }
  CStr() = default;
  CStr(const CStr&) = delete;
  CStr& operator=(const CStr&) = delete;
  char** out() {
    wp_string_free(p);
    p = nullptr;
    return &p;
  }
  const char* c_str() const { return p ? p : ""; }
  bool has() const { return p != nullptr; }
};

const char* kParamNames[3] = {"energy", "amplitude", "pressure"};
const char* kKindNames[4] = {"mlr", "svr", "mlp", "cnn"};

bool known_kind(const std::string& k) {
  for (const char* n : kKindNames)
    if (k == n) return true;
  return false;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) usage_fail("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json_object(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) usage_fail(what + " must be a JSON object");
  return j;
}

// ---- run configuration ------------------------------------------------------
// Defaults < config file < command-line flags.

struct RunConfig {
  std::optional<std::string> data;      // CSV path
  std::optional<std::size_t> synth_n;   // or synthesize on the fly
  json synth_params = json::object();   // generator overrides
  std::optional<std::size_t> test_count;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  double tolerance = 0.15;
  json models = json::object();  // per-kind hyperparameter blocks
};

void apply_config_file(RunConfig& rc, const std::string& path) {
  json j = parse_json_object(slurp(path), "config file " + path);
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    json& v = it.value();
    if (key == "data") {
      if (!v.is_string()) usage_fail("config: \"data\" must be a string path");
      rc.data = v.get<std::string>();
    } else if (key == "synth") {
      if (!v.is_object()) usage_fail("config: \"synth\" must be an object");
      for (auto st = v.begin(); st != v.end(); ++st) {
        if (st.key() == "n") {
          if (!st.value().is_number_unsigned() || st.value().get<std::size_t>() == 0)
            usage_fail("config: synth.n must be a positive integer");
          rc.synth_n = st.value().get<std::size_t>();
        } else if (st.key() == "params") {
          if (!st.value().is_object()) usage_fail("config: synth.params must be an object");
          rc.synth_params = st.value();
        } else {
          usage_fail("config: unknown synth key \"" + st.key() + "\"");
        }
      }
      if (!rc.synth_n) usage_fail("config: synth requires \"n\"");
    } else if (key == "test_count") {
      if (!v.is_number_unsigned()) usage_fail("config: \"test_count\" must be a non-negative integer");
      rc.test_count = v.get<std::size_t>();
    } else if (key == "seed") {
      if (!v.is_number_unsigned()) usage_fail("config: \"seed\" must be a non-negative integer");
      rc.seed = v.get<std::uint64_t>();
    } else if (key == "out_dir") {
      if (!v.is_string()) usage_fail("config: \"out_dir\" must be a string path");
      rc.out_dir = v.get<std::string>();
    } else if (key == "tolerance") {
      if (!v.is_number() || v.get<double>() <= 0.0)
        usage_fail("config: \"tolerance\" must be a positive number");
      rc.tolerance = v.get<double>();
    } else if (key == "models") {
      if (!v.is_object()) usage_fail("config: \"models\" must be an object");
      for (auto mt = v.begin(); mt != v.end(); ++mt) {
        if (!known_kind(mt.key()))
          usage_fail("config: unknown model kind \"" + mt.key() + "\" under models");
        if (!mt.value().is_object())
          usage_fail("config: models." + mt.key() + " must be an object");
      }
      rc.models = v;
    } else {
      usage_fail("config: unknown key \"" + key + "\"");
    }
  }
}

// The hyperparameter block handed to training: config-file block for the kind,
// with inline --hyper keys layered on top.
std::string model_config_json(const RunConfig& rc, const std::string& kind,
                              const std::string& hyper_inline) {
  json block = rc.models.contains(kind) ? rc.models[kind] : json::object();
  if (!hyper_inline.empty()) {
    json over = parse_json_object(hyper_inline, "--hyper");
    block.update(over);
  }
  return block.empty() ? std::string() : block.dump();
}

void report_rejected(const CStr& rejected) {
  if (rejected.has()) std::fputs(rejected.c_str(), stderr);
}

DatasetH read_dataset(const std::string& path) {
  DatasetH ds;
  CStr rejected;
  check(wp_dataset_read_csv(path.c_str(), ds.out(), rejected.out()));
  report_rejected(rejected);
  return ds;
}

// Resolves the single data source (CSV path or synth spec) after merging.
DatasetH load_data_source(const RunConfig& rc) {
  if (rc.data && rc.synth_n)
    usage_fail("exactly one data source allowed: --data or a synth spec, not both");
  if (rc.data) return read_dataset(*rc.data);
  if (rc.synth_n) {
    DatasetH ds;
    std::string params = rc.synth_params.empty() ? std::string() : rc.synth_params.dump();
    check_input(wp_dataset_synthesize(*rc.synth_n, params.c_str(), rc.seed, ds.out()));
    return ds;
  }
  usage_fail("no data source: give --data FILE (or --synth-n N, or set one in --config)");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Fail{1, "cannot write file: " + path.string()};
  out << text;
  if (!out) throw Fail{1, "write failed: " + path.string()};
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Fail{1, "cannot create directory " + dir.string() + ": " + ec.message()};
}

std::vector<std::array<double, 16>> parse_inline_wires(const std::string& text) {
  std::vector<double> raw;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      double v = std::stod(cell, &used);
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
      if (used != cell.size()) throw std::invalid_argument(cell);
      raw.push_back(v);
    } catch (const std::exception&) {
      usage_fail("--wires: cannot parse \"" + cell + "\" as a number");
    }
  }
  std::array<double, 16> canon{};
  check_input(wp_wire_vector_canonical(raw.data(), raw.size(), canon.data()));
  return {canon};
}

void print_prediction(const double y[3], bool six_significant) {
  const char* fmt = six_significant
                        ? "energy=%.6g Ws amplitude=%.6g %% pressure=%.6g bar\n"
                        : "energy=%.2f Ws amplitude=%.2f %% pressure=%.2f bar\n";
  std::printf(fmt, y[0], y[1], y[2]);
}

// ---- commands ---------------------------------------------------------------

int cmd_convert(const std::string& in, const std::string& out) {
  DatasetH ds;
  CStr rejected;
  check(wp_dataset_convert_raw_csv(in.c_str(), ds.out(), rejected.out()));
  report_rejected(rejected);
  check(wp_dataset_write_csv(ds.get(), out.c_str()));
  std::printf("converted %zu record(s) -> %s\n", wp_dataset_size(ds.get()), out.c_str());
  return 0;
}

int cmd_synth(const RunConfig& rc, std::size_t n, const std::string& params_file,
              const std::string& out) {
  if (n == 0) usage_fail("--n must be at least 1");
  std::string params;
  if (!params_file.empty())
    params = slurp(params_file);
  else if (!rc.synth_params.empty())
    params = rc.synth_params.dump();
  DatasetH ds;
  check_input(wp_dataset_synthesize(n, params.c_str(), rc.seed, ds.out()));
  check(wp_dataset_write_csv(ds.get(), out.c_str()));
  std::printf("synthesized %zu record(s) (seed %llu) -> %s\n", n,
              static_cast<unsigned long long>(rc.seed), out.c_str());
  return 0;
}

int cmd_train(const RunConfig& rc, const std::string& kind, const std::string& hyper,
              std::string out_model) {
  DatasetH ds = load_data_source(rc);
  std::string cfg = model_config_json(rc, kind, hyper);
  ModelH model;
  check_input(wp_model_train(kind.c_str(), ds.get(), cfg.c_str(), rc.seed, model.out()));
  if (out_model.empty()) {
    ensure_dir(rc.out_dir);
    out_model = (fs::path(rc.out_dir) / ("model_" + kind + ".json")).string();
  }
  check(wp_model_save(model.get(), out_model.c_str()));
  CStr summary;
  check(wp_model_summary(model.get(), summary.out()));
  std::fputs(summary.c_str(), stdout);
  std::printf("saved %s model -> %s\n", kind.c_str(), out_model.c_str());
  return 0;
}

int cmd_predict(const std::string& model_file, const std::string& wires,
                const std::string& in_csv, const std::string& out_csv) {
  if (wires.empty() == in_csv.empty())
    usage_fail("give exactly one input: --wires LIST or --in FILE");
  ModelH model;
  check(wp_model_load(model_file.c_str(), model.out()));
  bool six_sig = std::strcmp(wp_model_kind(model.get()), "cnn") == 0;

  std::vector<std::array<double, 16>> inputs;
  if (!wires.empty()) {
    inputs = parse_inline_wires(wires);
  } else {
    InputsH in;
    CStr rejected;
    check(wp_inputs_read_csv(in_csv.c_str(), in.out(), rejected.out()));
    report_rejected(rejected);
    inputs.resize(wp_inputs_size(in.get()));
    for (std::size_t i = 0; i < inputs.size(); ++i)
      check(wp_inputs_get(in.get(), i, inputs[i].data()));
  }

  std::ofstream csv;
  if (!out_csv.empty()) {
    csv.open(out_csv, std::ios::binary);
    if (!csv) throw Fail{1, "cannot write file: " + out_csv};
    csv << "Energy,Amplitude,Pressure\n";
  }
  for (auto& x : inputs) {
    double y[3];
    check(wp_model_predict(model.get(), x.data(), y));
    print_prediction(y, six_sig);
    if (csv.is_open()) {
      char line[128];
      std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", y[0], y[1], y[2]);
      csv << line;
    }
  }
  return 0;
}

ReportH evaluate_model(ModelH& model, const DatasetH& test, double tol, bool warn_same_data) {
  if (warn_same_data) {
    CStr fp;
    check(wp_dataset_fingerprint(test.get(), fp.out()));
    if (std::strcmp(fp.c_str(), wp_model_train_fingerprint(model.get())) == 0)
      std::fprintf(stderr,
                   "warning: evaluation data matches the model's training data "
                   "(fingerprint %s); scores measure recall, not generalization\n",
                   fp.c_str());
  }
  ReportH rep;
  check(wp_model_evaluate(model.get(), test.get(), tol, rep.out()));
  return rep;
}

void write_report_files(const ReportH& rep, const fs::path& dir, const std::string& kind) {
  check(wp_report_write_csv(rep.get(), (dir / ("report_" + kind + ".csv")).string().c_str()));
  for (int p = 0; p < 3; ++p) {
    fs::path f = dir / ("scatter_" + kind + "_" + kParamNames[p] + ".csv");
    check(wp_report_scatter_csv(rep.get(), p, f.string().c_str()));
  }
}

int cmd_evaluate(const RunConfig& rc, const std::string& model_file, bool want_files) {
  ModelH model;
  check(wp_model_load(model_file.c_str(), model.out()));
  DatasetH test = load_data_source(rc);
  ReportH rep = evaluate_model(model, test, rc.tolerance, true);

  const wp_report* one[1] = {rep.get()};
  CStr table;
  check(wp_reports_render_table(one, 1, table.out()));
  std::fputs(table.c_str(), stdout);

  if (want_files) {
    ensure_dir(rc.out_dir);
    write_report_files(rep, rc.out_dir, wp_model_kind(model.get()));
  }
  return 0;
}

int cmd_compare(const RunConfig& rc, const std::vector<std::string>& kinds) {
  if (kinds.empty()) usage_fail("--models must name at least one model kind");
  for (auto& k : kinds)
    if (!known_kind(k)) usage_fail("unknown model kind \"" + k + "\"");

  DatasetH full = load_data_source(rc);
  std::size_t n = wp_dataset_size(full.get());
  std::size_t test_count = rc.test_count ? *rc.test_count : std::max<std::size_t>(1, n / 5);
  DatasetH train, test;
  check_input(wp_dataset_split(full.get(), test_count, rc.seed, train.out(), test.out()));
  std::printf("split %zu records into %zu train / %zu test (seed %llu)\n", n,
              wp_dataset_size(train.get()), wp_dataset_size(test.get()),
              static_cast<unsigned long long>(rc.seed));

  ensure_dir(rc.out_dir);
  fs::path dir(rc.out_dir);

  std::vector<ModelH> models;
  std::vector<ReportH> reports;
  for (auto& kind : kinds) {
    std::string cfg = model_config_json(rc, kind, "");
    ModelH model;
    check_input(wp_model_train(kind.c_str(), train.get(), cfg.c_str(), rc.seed, model.out()));
    check(wp_model_save(model.get(), (dir / ("model_" + kind + ".json")).string().c_str()));
    CStr summary;
    check(wp_model_summary(model.get(), summary.out()));
    std::fputs(summary.c_str(), stdout);

    ReportH rep = evaluate_model(model, test, rc.tolerance, false);
    write_report_files(rep, dir, kind);
    models.push_back(std::move(model));
    reports.push_back(std::move(rep));
  }

  std::vector<const wp_report*> flat;
  for (auto& r : reports) flat.push_back(r.get());
  CStr table;
  check(wp_reports_render_table(flat.data(), flat.size(), table.out()));
  std::fputs(table.c_str(), stdout);
  write_text(dir / "comparison.txt", table.c_str());

  RecommendationH rec;
  check(wp_recommend(flat.data(), flat.size(), rec.out()));
  CStr rendered;
  check(wp_recommendation_render(rec.get(), rendered.out()));
  std::fputs(rendered.c_str(), stdout);
  write_text(dir / "recommendation.txt", rendered.c_str());
  return 0;
}

int cmd_encode(const std::string& wires, const std::string& out, double scale_max, bool raw) {
  auto inputs = parse_inline_wires(wires);
  check_input(wp_export_pgm(inputs[0].data(), scale_max, raw ? 0 : 1, out.c_str()));
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ultrasonic-welding parameter prediction: data prep, training, "
               "evaluation and model comparison"};
  app.require_subcommand(1);

  RunConfig rc;
  std::string config_file;

  auto add_globals = [&](CLI::App* sub) {
    sub->add_option("--config", config_file, "JSON run configuration; flags override it");
    sub->add_option("--seed", rc.seed, "seed for every stochastic step")
        ->option_text("UINT64");
    sub->add_option("--out-dir", rc.out_dir, "directory for produced files");
    return sub;
  };
  // Track which globals were set on the command line so they can override the
  // config file after it is loaded.
  auto merge_config = [&](CLI::App* sub, const char* data_flag = nullptr,
                          const std::optional<std::string>& data_val = std::nullopt,
                          const std::optional<std::size_t>& synth_val = std::nullopt) {
    std::uint64_t seed_flag = rc.seed;
    std::string out_dir_flag = rc.out_dir;
    bool seed_set = sub->count("--seed") > 0;
    bool out_dir_set = sub->count("--out-dir") > 0;
    if (!config_file.empty()) {
      rc.seed = 0;
      rc.out_dir = ".";
      apply_config_file(rc, config_file);
    }
    if (seed_set) rc.seed = seed_flag;
    if (out_dir_set) rc.out_dir = out_dir_flag;
    if (data_flag && data_val) {
      rc.data = data_val;
      rc.synth_n.reset();
    }
    if (synth_val) {
      rc.synth_n = synth_val;
      if (!(data_flag && data_val)) rc.data.reset();
    }
    if (data_val && synth_val) usage_fail("give --data or --synth-n, not both");
  };

  // convert
  std::string in_path, out_path;
  CLI::App* convert = app.add_subcommand("convert", "raw factory CSV -> canonical wide CSV");
  convert->add_option("--in,-i", in_path, "raw export CSV")->required();
  convert->add_option("--out,-o", out_path, "canonical CSV to write")->required();
  add_globals(convert);

  // synth
  std::size_t synth_n = 0;
  std::string params_file;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset CSV");
  synth->add_option("--n,-n", synth_n, "number of records")->required();
  synth->add_option("--params", params_file, "JSON generator-parameter overrides");
  synth->add_option("--out,-o", out_path, "CSV to write")->required();
  add_globals(synth);

  // train
  std::string kind, hyper, data_path, model_out;
  CLI::App* train = app.add_subcommand("train", "fit one model and save its artifact");
  train->add_option("--model,-m", kind, "mlr | svr | mlp | cnn")
      ->required()
      ->check(CLI::IsMember(std::vector<std::string>(std::begin(kKindNames),
                                                     std::end(kKindNames))));
  train->add_option("--data,-d", data_path, "training dataset CSV");
  train->add_option("--hyper", hyper, "inline JSON hyperparameter overrides");
  train->add_option("--out,-o", model_out, "artifact path (default OUT_DIR/model_KIND.json)");
  add_globals(train);

  // predict
  std::string model_file, wires, pred_out;
  CLI::App* predict = app.add_subcommand("predict", "predict parameters for wire vectors");
  predict->add_option("--model-file,-M", model_file, "trained model artifact")->required();
  predict->add_option("--wires,-w", wires, "inline comma-separated cross-sections, mm^2");
  predict->add_option("--in,-i", in_path, "CSV with Wire 1..Wire 16 columns");
  predict->add_option("--out,-o", pred_out, "also write predictions as CSV");
  add_globals(predict);

  // evaluate
  bool eval_files = false;
  CLI::App* evaluate = app.add_subcommand("evaluate", "score a saved model on a dataset");
  evaluate->add_option("--model-file,-M", model_file, "trained model artifact")->required();
  evaluate->add_option("--data,-d", data_path, "evaluation dataset CSV");
  evaluate->add_option("--tol", rc.tolerance, "relative tolerance band (default 0.15)")
      ->check(CLI::PositiveNumber);
  evaluate->add_flag("--write-reports", eval_files,
                     "write report_*.csv and scatter_*.csv into OUT_DIR");
  add_globals(evaluate);

  // compare
  std::vector<std::string> compare_kinds{kKindNames, kKindNames + 4};
  std::optional<std::size_t> test_count_flag;
  std::optional<std::size_t> compare_synth_n;
  CLI::App* compare = app.add_subcommand(
      "compare", "train several models on one split, report and recommend");
  compare->add_option("--data,-d", data_path, "dataset CSV");
  compare->add_option("--synth-n", compare_synth_n, "synthesize N records instead of reading");
  compare->add_option("--params", params_file, "generator overrides for --synth-n");
  compare->add_option("--models,-m", compare_kinds, "model kinds to include")
      ->delimiter(',');
  compare->add_option("--test-count", test_count_flag, "held-out record count (default n/5)");
  compare->add_option("--tol", rc.tolerance, "relative tolerance band (default 0.15)")
      ->check(CLI::PositiveNumber);
  add_globals(compare);

  // encode (debug helper)
  double scale_max = 6.0;
  bool raw4 = false;
  CLI::App* encode = app.add_subcommand("encode", "export the gray-image encoding as PGM");
  encode->add_option("--wires,-w", wires, "inline comma-separated cross-sections, mm^2")
      ->required();
  encode->add_option("--out,-o", out_path, "PGM path")->required();
  encode->add_option("--scale-max", scale_max, "largest encodable cross-section (default 6)");
  encode->add_flag("--raw", raw4, "write the 4x4 image instead of the upscaled 16x16");
  add_globals(encode);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (convert->parsed()) {
      merge_config(convert);
      return cmd_convert(in_path, out_path);
    }
    if (synth->parsed()) {
      merge_config(synth);
      return cmd_synth(rc, synth_n, params_file, out_path);
    }
    if (train->parsed()) {
      merge_config(train, "--data",
                   train->count("--data") ? std::optional<std::string>(data_path) : std::nullopt);
      return cmd_train(rc, kind, hyper, model_out);
    }
    if (predict->parsed()) {
      merge_config(predict);
      return cmd_predict(model_file, wires, in_path, pred_out);
    }
    if (evaluate->parsed()) {
      double tol_flag = rc.tolerance;
      bool tol_set = evaluate->count("--tol") > 0;
      merge_config(evaluate, "--data",
                   evaluate->count("--data") ? std::optional<std::string>(data_path)
                                             : std::nullopt);
      if (tol_set) rc.tolerance = tol_flag;
      return cmd_evaluate(rc, model_file, eval_files);
    }
    if (compare->parsed()) {
      double tol_flag = rc.tolerance;
      bool tol_set = compare->count("--tol") > 0;
      merge_config(compare, "--data",
                   compare->count("--data") ? std::optional<std::string>(data_path)
                                            : std::nullopt,
                   compare_synth_n);
      if (tol_set) rc.tolerance = tol_flag;
      if (test_count_flag) rc.test_count = test_count_flag;
      if (compare_synth_n && !params_file.empty())
        rc.synth_params = parse_json_object(slurp(params_file), "--params file");
      return cmd_compare(rc, compare_kinds);
    }
    if (encode->parsed()) {
      merge_config(encode);
      return cmd_encode(wires, out_path, scale_max, raw4);
    }
  } catch (const Fail& f) {
    std::fprintf(stderr, "error: %s\n", f.msg.c_str());
    return f.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
