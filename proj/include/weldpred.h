#ifndef WELDPRED_H
#define WELDPRED_H

/* C interface to the welding-parameter prediction library.
 *
 * All functions returning wp_status set a thread-local error message
 * retrievable with wp_last_error() on failure. Strings handed out through
 * char** parameters are owned by the caller and released with
 * wp_string_free(); const char* returns stay owned by the library object
 * and are "" (never NULL) when the object handle is NULL.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define WP_API __declspec(dllexport)
#else
#define WP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wp_status {
  WP_OK = 0,
  WP_E_INVALID_ARGUMENT = 1,
  WP_E_PARSE = 2,
  WP_E_IO = 3,
  WP_E_TRAINING = 4,
  WP_E_BAD_MODEL = 5,
  WP_E_INTERNAL = 6
} wp_status;

/* parameter indices used throughout */
enum { WP_PARAM_ENERGY = 0, WP_PARAM_AMPLITUDE = 1, WP_PARAM_PRESSURE = 2 };

typedef struct wp_dataset wp_dataset;
typedef struct wp_inputs wp_inputs;
typedef struct wp_model wp_model;
typedef struct wp_report wp_report;
typedef struct wp_recommendation wp_recommendation;

WP_API const char* wp_last_error(void);
WP_API void wp_string_free(char* s);

/* ---- datasets ----------------------------------------------------------- */

/* Wide CSV (Wire 1..Wire 16, Energy, Amplitude, Pressure). rejected_report
 * (optional) receives a human-readable list of skipped rows, or NULL when
 * every row ingested. */
WP_API wp_status wp_dataset_read_csv(const char* path, wp_dataset** out, char** rejected_report);

/* Raw factory export (Product layout side1/side2 + labels). */
WP_API wp_status wp_dataset_convert_raw_csv(const char* path, wp_dataset** out,
                                            char** rejected_report);

/* params_json: generator coefficients/noise/alphabet overrides; NULL or ""
 * for the built-in defaults. */
WP_API wp_status wp_dataset_synthesize(size_t n, const char* params_json, uint64_t seed,
                                       wp_dataset** out);

WP_API wp_status wp_dataset_write_csv(const wp_dataset* ds, const char* path);
WP_API wp_status wp_dataset_split(const wp_dataset* ds, size_t test_count, uint64_t seed,
                                  wp_dataset** train, wp_dataset** test);
WP_API size_t wp_dataset_size(const wp_dataset* ds);
WP_API wp_status wp_dataset_record(const wp_dataset* ds, size_t index, double sections[16],
                                   double labels[3]);
WP_API wp_status wp_dataset_fingerprint(const wp_dataset* ds, char** out);
WP_API void wp_dataset_free(wp_dataset* ds);

/* Label-free prediction inputs (Wire 1..Wire 16 columns only). */
WP_API wp_status wp_inputs_read_csv(const char* path, wp_inputs** out, char** rejected_report);
WP_API size_t wp_inputs_size(const wp_inputs* in);
WP_API wp_status wp_inputs_get(const wp_inputs* in, size_t index, double out[16]);
WP_API void wp_inputs_free(wp_inputs* in);

/* Validates raw sections (2..16 positive values) and writes the canonical
 * sorted, zero-padded 16-slot form. */
WP_API wp_status wp_wire_vector_canonical(const double* sections, size_t count, double out[16]);

/* ---- models ------------------------------------------------------------- */

/* kind: "mlr" | "svr" | "mlp" | "cnn". config_json overrides the kind's
 * default hyperparameters; NULL or "" keeps them. */
WP_API wp_status wp_model_train(const char* kind, const wp_dataset* train,
                                const char* config_json, uint64_t seed, wp_model** out);
WP_API wp_status wp_model_save(const wp_model* model, const char* path);
WP_API wp_status wp_model_load(const char* path, wp_model** out);
WP_API const char* wp_model_kind(const wp_model* model);
WP_API const char* wp_model_train_fingerprint(const wp_model* model);
WP_API wp_status wp_model_summary(const wp_model* model, char** out);

/* sections: canonical or raw order; they are canonicalized before use. */
WP_API wp_status wp_model_predict(wp_model* model, const double sections[16], double out[3]);
WP_API void wp_model_free(wp_model* model);

/* ---- evaluation --------------------------------------------------------- */

/* tol: relative tolerance band, e.g. 0.15 for the +-15% metric. */
WP_API wp_status wp_model_evaluate(wp_model* model, const wp_dataset* test, double tol,
                                   wp_report** out);
WP_API const char* wp_report_model_name(const wp_report* report);
WP_API size_t wp_report_n(const wp_report* report);
WP_API wp_status wp_report_metrics(const wp_report* report, int param, double* mae,
                                   double* accuracy);
WP_API wp_status wp_report_write_csv(const wp_report* report, const char* path);
WP_API wp_status wp_report_scatter_csv(const wp_report* report, int param, const char* path);
WP_API void wp_report_free(wp_report* report);

WP_API wp_status wp_reports_render_table(const wp_report* const* reports, size_t count,
                                         char** out);

/* Per parameter, the report with the best tolerance accuracy (ties: lower
 * MAE, then model name). */
WP_API wp_status wp_recommend(const wp_report* const* reports, size_t count,
                              wp_recommendation** out);
WP_API wp_status wp_recommendation_get(const wp_recommendation* rec, int param,
                                       const char** model, double* accuracy, double* mae);
WP_API wp_status wp_recommendation_render(const wp_recommendation* rec, char** out);

/* models are matched to the recommendation by their kind name. */
WP_API wp_status wp_combined_predict(const wp_recommendation* rec, wp_model* const* models,
                                     size_t count, const double sections[16], double out[3]);
WP_API void wp_recommendation_free(wp_recommendation* rec);

/* ---- image debug export ------------------------------------------------- */

/* Writes the gray-image encoding of a wire vector as plain PGM (P2);
 * upscaled != 0 exports the 16x16 block-replicated form, else the raw 4x4. */
WP_API wp_status wp_export_pgm(const double sections[16], double scale_max, int upscaled,
                               const char* path);

#ifdef __cplusplus
}
#endif

#endif /* WELDPRED_H */
