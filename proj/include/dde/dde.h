#ifndef DDE_DDE_H
#define DDE_DDE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(DDE_BUILDING_LIBRARY)
#    define DDE_API __declspec(dllexport)
#  else
#    define DDE_API __declspec(dllimport)
#  endif
#else
#  define DDE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dde_status {
  DDE_OK = 0,
  DDE_E_INVALID_ARGUMENT = 1,
  DDE_E_SHAPE = 2,
  DDE_E_VALIDATION = 3,
  DDE_E_CAPACITY = 4,
  DDE_E_NUMERIC = 5,
  DDE_E_IO = 6,
  DDE_E_UNSUPPORTED = 7,
  DDE_E_INTERNAL = 8
} dde_status;

typedef struct dde_model dde_model;
typedef struct dde_dataset dde_dataset;
typedef struct dde_latents dde_latents;
typedef struct dde_fit_report dde_fit_report;

/* Message of the last failed call on this thread; empty after success. */
DDE_API const char* dde_last_error(void);
DDE_API const char* dde_status_name(int status);
DDE_API const char* dde_version(void);

/* Strings returned through char** belong to the caller. */
DDE_API void dde_string_free(char* s);

/* 0 restores the default (DDE_THREADS or hardware concurrency). */
DDE_API int dde_set_threads(int threads);

/* ---- models ---- */
DDE_API int dde_model_load(const char* path, dde_model** out);
DDE_API int dde_model_save(const dde_model* model, const char* path);
DDE_API int dde_model_from_json(const char* json, dde_model** out);
DDE_API int dde_model_to_json(const dde_model* model, char** out);
/* kind: "strict" or "generic"; family: "normal", "bernoulli:9,poisson:9", ... */
DDE_API int dde_model_benchmark(const char* kind, size_t J, const size_t* K, size_t depth,
                                const char* family, dde_model** out);
DDE_API size_t dde_model_depth(const dde_model* model);
/* Layer size; layer 0 is the observed layer. Returns 0 when out of range. */
DDE_API size_t dde_model_layer_size(const dde_model* model, size_t layer);
DDE_API void dde_model_free(dde_model* model);

/* ---- datasets (row-major N x J) ---- */
DDE_API int dde_dataset_read_csv(const char* path, dde_dataset** out);
DDE_API int dde_dataset_write_csv(const dde_dataset* data, const char* path);
DDE_API int dde_dataset_from_buffer(const double* values, size_t rows, size_t cols,
                                    dde_dataset** out);
DDE_API size_t dde_dataset_rows(const dde_dataset* data);
DDE_API size_t dde_dataset_cols(const dde_dataset* data);
DDE_API const double* dde_dataset_values(const dde_dataset* data);
DDE_API void dde_dataset_free(dde_dataset* data);

/* ---- latent assignments ---- */
DDE_API size_t dde_latents_depth(const dde_latents* latents);
/* layer is 1-based; 0 writes every layer side by side, shallowest first. */
DDE_API int dde_latents_write_csv(const dde_latents* latents, size_t layer, const char* path);
DDE_API void dde_latents_free(dde_latents* latents);

/* ---- simulation ---- */
DDE_API int dde_sample(const dde_model* model, size_t N, uint64_t seed, dde_dataset** data,
                       dde_latents** latents);

/* ---- spectral initialisation and dimension selection ---- */
/* Outputs may be NULL when unwanted; warnings is a JSON array. */
DDE_API int dde_spectral_init(const dde_dataset* data, const char* family, const size_t* K,
                              size_t depth, dde_model** model, dde_latents** latents,
                              char** warnings_json);
DDE_API int dde_select_k(const dde_dataset* data, const char* family, size_t depth,
                         const size_t* grid, size_t grid_len, char** out_json);

/* ---- estimation ---- */
/* options_json: {"algo","penalty","lambda","tau","observed_penalty","layers","gibbs_c",
   "burn_in","step_exponent","max_iter","seed","conv","init","accelerate",
   "marginal_latent_dim"}; NULL means defaults. A non-NULL
   start model replaces the initialiser. */
DDE_API int dde_fit(const dde_dataset* data, const char* family, const size_t* K, size_t depth,
                    const dde_model* start, const char* options_json, dde_fit_report** out);
DDE_API int dde_fit_report_model(const dde_fit_report* report, dde_model** out);
DDE_API int dde_fit_report_to_json(const dde_fit_report* report, char** out);
DDE_API size_t dde_fit_report_iterations(const dde_fit_report* report);
DDE_API int dde_fit_report_converged(const dde_fit_report* report);
DDE_API void dde_fit_report_free(dde_fit_report* report);

/* ---- identifiability ---- */
/* condition: "A", "A3", "B", "C" or "assumptions". verdict: 0 yes, 1 no,
   2 unknown (worst over layers). */
DDE_API int dde_check_id(const dde_model* model, const char* condition, char** out_json,
                         int* verdict);

/* ---- evaluation ---- */
/* data may be NULL. */
DDE_API int dde_evaluate(const dde_model* estimate, const dde_model* truth,
                         const dde_dataset* data, char** out_json);
DDE_API int dde_posterior_latents(const dde_model* model, const dde_dataset* data,
                                  dde_latents** out);
DDE_API int dde_perplexity(const dde_model* model, const dde_dataset* data, double train_fraction,
                           uint64_t seed, char** out_json);
DDE_API int dde_topic_metrics(const dde_model* model, const dde_dataset* doc_freq, size_t top_m,
                              char** out_json);

/* ---- benchmark ---- */
DDE_API int dde_benchmark(const char* spec_json, char** result_json, char** curves_csv);

/* FNV-1a of a file's bytes, 16 hex digits. */
DDE_API int dde_file_digest(const char* path, char** out);

#ifdef __cplusplus
}
#endif

#endif
