// C ABI layer: thin wrappers that translate exceptions into status codes
// and hide the C++ types behind opaque structs.

#include "weldpred.h"

#include <cstdlib>
#include <cstring>
#include <map>
#include <new>
#include <string>
#include <utility>
#include <vector>

#include "weldpred/dataset.hpp"
#include "weldpred/error.hpp"
#include "weldpred/eval.hpp"
#include "weldpred/image.hpp"
#include "weldpred/model_io.hpp"

using namespace weldpred;

struct wp_dataset {
  Dataset ds;
};
struct wp_inputs {
  std::vector<WireVector> inputs;
};
struct wp_model {
  ModelArtifact art;
};
struct wp_report {
  EvalReport rep;
};
struct wp_recommendation {
  Recommendation rec;
};

namespace {

thread_local std::string t_last_error;

wp_status code_of(Errc c) {
  switch (c) {
    case Errc::invalid_argument: return WP_E_INVALID_ARGUMENT;
    case Errc::parse: return WP_E_PARSE;
    case Errc::io: return WP_E_IO;
    case Errc::training: return WP_E_TRAINING;
    case Errc::bad_model: return WP_E_BAD_MODEL;
  }
  return WP_E_INTERNAL;
}

template <typename F>
wp_status guarded(F&& f) {
  try {
    f();
    return WP_OK;
  } catch (const Error& e) {
    t_last_error = e.what();
    return code_of(e.code());
  } catch (const std::bad_alloc&) {
    t_last_error = "out of memory";
    return WP_E_INTERNAL;
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return WP_E_INTERNAL;
  }
}

wp_status fail_arg(const char* msg) {
  t_last_error = msg;
  return WP_E_INVALID_ARGUMENT;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// NULL when nothing was rejected, so callers can branch on the pointer.
void emit_rejected(char** slot, const std::vector<RejectedRow>& rejected) {
  if (!slot) return;
  *slot = rejected.empty() ? nullptr : dup_string(render_rejected_report(rejected));
}

WireVector vector_from_c(const double sections[16]) {
  return WireVector::from_sections(std::span<const double>(sections, kWireSlots));
}

bool param_ok(int param) { return param >= 0 && param < static_cast<int>(kParamCount); }

std::vector<EvalReport> collect_reports(const wp_report* const* reports, size_t count) {
  std::vector<EvalReport> flat;
  flat.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    if (!reports[i]) throw Error(Errc::invalid_argument, "reports must not contain NULL");
    flat.push_back(reports[i]->rep);
  }
  return flat;
}

}  // namespace

extern "C" {

const char* wp_last_error(void) { return t_last_error.c_str(); }

void wp_string_free(char* s) { std::free(s); }

// ---- datasets -------------------------------------------------------------

wp_status wp_dataset_read_csv(const char* path, wp_dataset** out, char** rejected_report) {
  if (!path || !out) return fail_arg("path and out must not be NULL");
  return guarded([&] {
    IngestResult r = read_dataset_csv(path);
    emit_rejected(rejected_report, r.rejected);
    *out = new wp_dataset{std::move(r.dataset)};
  });
}

wp_status wp_dataset_convert_raw_csv(const char* path, wp_dataset** out, char** rejected_report) {
  if (!path || !out) return fail_arg("path and out must not be NULL");
  return guarded([&] {
    IngestResult r = convert_raw_csv(path);
    emit_rejected(rejected_report, r.rejected);
    *out = new wp_dataset{std::move(r.dataset)};
  });
}

wp_status wp_dataset_synthesize(size_t n, const char* params_json, uint64_t seed,
                                wp_dataset** out) {
  if (!out) return fail_arg("out must not be NULL");
  return guarded([&] {
    GeneratorParams p = generator_params_from_json(params_json ? params_json : "");
    *out = new wp_dataset{synthesize(n, p, seed)};
  });
}

wp_status wp_dataset_write_csv(const wp_dataset* ds, const char* path) {
  if (!ds || !path) return fail_arg("ds and path must not be NULL");
  return guarded([&] { write_dataset_csv(ds->ds, path); });
}

wp_status wp_dataset_split(const wp_dataset* ds, size_t test_count, uint64_t seed,
                           wp_dataset** train, wp_dataset** test) {
  if (!ds || !train || !test) return fail_arg("ds, train and test must not be NULL");
  return guarded([&] {
    auto [tr, te] = split(ds->ds, test_count, seed);
    *train = new wp_dataset{std::move(tr)};
    *test = new wp_dataset{std::move(te)};
  });
}

size_t wp_dataset_size(const wp_dataset* ds) { return ds ? ds->ds.size() : 0; }

wp_status wp_dataset_record(const wp_dataset* ds, size_t index, double sections[16],
                            double labels[3]) {
  if (!ds) return fail_arg("ds must not be NULL");
  if (index >= ds->ds.size()) return fail_arg("record index out of range");
  const Record& r = ds->ds.records[index];
  if (sections)
    for (int i = 0; i < kWireSlots; ++i) sections[i] = r.x.sections[i];
  if (labels) {
    auto y = r.y.as_array();
    for (int i = 0; i < static_cast<int>(kParamCount); ++i) labels[i] = y[i];
  }
  return WP_OK;
}

wp_status wp_dataset_fingerprint(const wp_dataset* ds, char** out) {
  if (!ds || !out) return fail_arg("ds and out must not be NULL");
  return guarded([&] { *out = dup_string(dataset_fingerprint(ds->ds)); });
}

void wp_dataset_free(wp_dataset* ds) { delete ds; }

wp_status wp_inputs_read_csv(const char* path, wp_inputs** out, char** rejected_report) {
  if (!path || !out) return fail_arg("path and out must not be NULL");
  return guarded([&] {
    InputsResult r = read_inputs_csv(path);
    emit_rejected(rejected_report, r.rejected);
    *out = new wp_inputs{std::move(r.inputs)};
  });
}

size_t wp_inputs_size(const wp_inputs* in) { return in ? in->inputs.size() : 0; }

wp_status wp_inputs_get(const wp_inputs* in, size_t index, double out[16]) {
  if (!in || !out) return fail_arg("in and out must not be NULL");
  if (index >= in->inputs.size()) return fail_arg("input index out of range");
  for (int i = 0; i < kWireSlots; ++i) out[i] = in->inputs[index].sections[i];
  return WP_OK;
}

void wp_inputs_free(wp_inputs* in) { delete in; }

wp_status wp_wire_vector_canonical(const double* sections, size_t count, double out[16]) {
  if (!sections || !out) return fail_arg("sections and out must not be NULL");
  return guarded([&] {
    WireVector w = WireVector::from_sections(std::span<const double>(sections, count));
    for (int i = 0; i < kWireSlots; ++i) out[i] = w.sections[i];
  });
}

// ---- models ---------------------------------------------------------------

wp_status wp_model_train(const char* kind, const wp_dataset* train, const char* config_json,
                         uint64_t seed, wp_model** out) {
  if (!kind || !train || !out) return fail_arg("kind, train and out must not be NULL");
  return guarded([&] {
    ModelKind k = parse_kind(kind);
    *out = new wp_model{train_model(k, train->ds, config_json ? config_json : "", seed)};
  });
}

wp_status wp_model_save(const wp_model* model, const char* path) {
  if (!model || !path) return fail_arg("model and path must not be NULL");
  return guarded([&] { save_model(model->art, path); });
}

wp_status wp_model_load(const char* path, wp_model** out) {
  if (!path || !out) return fail_arg("path and out must not be NULL");
  return guarded([&] { *out = new wp_model{load_model(path)}; });
}

const char* wp_model_kind(const wp_model* model) {
  return model ? kind_name(model->art.kind) : "";
}

const char* wp_model_train_fingerprint(const wp_model* model) {
  return model ? model->art.train_fingerprint.c_str() : "";
}

wp_status wp_model_summary(const wp_model* model, char** out) {
  if (!model || !out) return fail_arg("model and out must not be NULL");
  return guarded([&] { *out = dup_string(training_summary(model->art)); });
}

wp_status wp_model_predict(wp_model* model, const double sections[16], double out[3]) {
  if (!model || !sections || !out) return fail_arg("model, sections and out must not be NULL");
  return guarded([&] {
    auto y = predict_model(model->art, vector_from_c(sections));
    for (int i = 0; i < 3; ++i) out[i] = y[i];
  });
}

void wp_model_free(wp_model* model) { delete model; }

// ---- evaluation -----------------------------------------------------------

wp_status wp_model_evaluate(wp_model* model, const wp_dataset* test, double tol,
                            wp_report** out) {
  if (!model || !test || !out) return fail_arg("model, test and out must not be NULL");
  return guarded([&] {
    *out = new wp_report{
        evaluate(kind_name(model->art.kind), make_predictor(model->art), test->ds, tol)};
  });
}

const char* wp_report_model_name(const wp_report* report) {
  return report ? report->rep.model_name.c_str() : "";
}

size_t wp_report_n(const wp_report* report) {
  return report ? static_cast<size_t>(report->rep.n) : 0;
}

wp_status wp_report_metrics(const wp_report* report, int param, double* mae, double* accuracy) {
  if (!report) return fail_arg("report must not be NULL");
  if (!param_ok(param)) return fail_arg("param must be 0 (energy), 1 (amplitude) or 2 (pressure)");
  const ParamEval& pe = report->rep.by_param[static_cast<size_t>(param)];
  if (mae) *mae = pe.mae;
  if (accuracy) *accuracy = pe.accuracy;
  return WP_OK;
}

wp_status wp_report_write_csv(const wp_report* report, const char* path) {
  if (!report || !path) return fail_arg("report and path must not be NULL");
  return guarded([&] { write_report_csv(report->rep, path); });
}

wp_status wp_report_scatter_csv(const wp_report* report, int param, const char* path) {
  if (!report || !path) return fail_arg("report and path must not be NULL");
  if (!param_ok(param)) return fail_arg("param must be 0 (energy), 1 (amplitude) or 2 (pressure)");
  return guarded(
      [&] { write_scatter_csv(report->rep, static_cast<Param>(param), path); });
}

void wp_report_free(wp_report* report) { delete report; }

wp_status wp_reports_render_table(const wp_report* const* reports, size_t count, char** out) {
  if (!reports || !out) return fail_arg("reports and out must not be NULL");
  return guarded([&] { *out = dup_string(render_comparison(collect_reports(reports, count))); });
}

wp_status wp_recommend(const wp_report* const* reports, size_t count, wp_recommendation** out) {
  if (!reports || !out) return fail_arg("reports and out must not be NULL");
  return guarded(
      [&] { *out = new wp_recommendation{recommend(collect_reports(reports, count))}; });
}

wp_status wp_recommendation_get(const wp_recommendation* rec, int param, const char** model,
                                double* accuracy, double* mae) {
  if (!rec) return fail_arg("rec must not be NULL");
  if (!param_ok(param)) return fail_arg("param must be 0 (energy), 1 (amplitude) or 2 (pressure)");
  const Choice& c = rec->rec.by_param[static_cast<size_t>(param)];
  if (model) *model = c.model.c_str();
  if (accuracy) *accuracy = c.accuracy;
  if (mae) *mae = c.mae;
  return WP_OK;
}

wp_status wp_recommendation_render(const wp_recommendation* rec, char** out) {
  if (!rec || !out) return fail_arg("rec and out must not be NULL");
  return guarded([&] { *out = dup_string(render_recommendation(rec->rec)); });
}

wp_status wp_combined_predict(const wp_recommendation* rec, wp_model* const* models, size_t count,
                              const double sections[16], double out[3]) {
  if (!rec || !models || !sections || !out)
    return fail_arg("rec, models, sections and out must not be NULL");
  return guarded([&] {
    std::map<std::string, Predictor> by_name;
    for (size_t i = 0; i < count; ++i) {
      if (!models[i]) throw Error(Errc::invalid_argument, "models must not contain NULL");
      by_name[kind_name(models[i]->art.kind)] = make_predictor(models[i]->art);
    }
    auto y = combined_predict(rec->rec, by_name, vector_from_c(sections));
    for (int i = 0; i < 3; ++i) out[i] = y[i];
  });
}

void wp_recommendation_free(wp_recommendation* rec) { delete rec; }

// ---- image debug export ---------------------------------------------------

wp_status wp_export_pgm(const double sections[16], double scale_max, int upscaled,
                        const char* path) {
  if (!sections || !path) return fail_arg("sections and path must not be NULL");
  return guarded([&] {
    GrayImage img = encode(vector_from_c(sections), scale_max);
    if (upscaled) img = upscale(img);
    write_pgm(img, path);
  });
}

}  // extern "C"
