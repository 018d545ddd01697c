#ifndef HIERSEL_H
#define HIERSEL_H

#include <stddef.h>
#include <stdint.h>

#if defined(HIERSEL_BUILDING)
#define HS_API __attribute__((visibility("default")))
#else
#define HS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hs_status {
  HS_OK = 0,
  HS_INVALID_ARGUMENT = 1,
  HS_DIMENSION_MISMATCH = 2,
  HS_ZERO_COLUMN = 3,
  HS_OUT_OF_RANGE = 4,
  HS_SUPPORT_TOO_SMALL = 5,
  HS_TARGET_TOO_LARGE = 6,
  HS_RANK_DEFICIENT = 7,
  HS_ENUMERATION_TOO_LARGE = 8,
  HS_DICTIONARY_TOO_SMALL = 9,
  HS_PARSE_ERROR = 10,
  HS_MISSING_COLUMN = 11,
  HS_IO_ERROR = 12,
  HS_INTERNAL = 99
} hs_status;

typedef enum hs_prune_strategy {
  HS_PRUNE_BACKWARD = 0,
  HS_PRUNE_RANDOMIZED = 1,
  HS_PRUNE_MAUREY = 2
} hs_prune_strategy;

typedef enum hs_basis_kind { HS_BASIS_STEP = 0, HS_BASIS_RAMP = 1 } hs_basis_kind;

typedef enum hs_collinear_scope { HS_COLLINEAR_GLOBAL = 0, HS_COLLINEAR_ANCESTRAL = 1 } hs_collinear_scope;

/* Opaque handles. Each is released with its matching *_free function. */
typedef struct hs_dataset hs_dataset;
typedef struct hs_path hs_path;
typedef struct hs_model hs_model;
typedef struct hs_hier_result hs_hier_result;

HS_API const char* hs_version(void);
/* Message of the most recent failure on the calling thread. */
HS_API const char* hs_last_error(void);
/* Releases strings returned through char** out-parameters. */
HS_API void hs_string_free(char* s);

/* ---- datasets ---- */

/* formula: 0 reads the coefficients as 10/(25+j^2), 1 as 10/(25+2j). */
HS_API hs_status hs_dataset_simulate_linear(size_t n, size_t p, size_t active, double sigma, double rho,
                                            uint64_t seed, int formula, hs_dataset** out);
HS_API hs_status hs_dataset_simulate_step(size_t n, uint64_t seed, hs_dataset** out);
HS_API hs_status hs_dataset_load_csv(const char* path, const char* response_column, hs_dataset** out);
HS_API hs_status hs_dataset_write_csv(const hs_dataset* data, const char* path);
/* Fails with HS_INVALID_ARGUMENT for datasets that were not simulated. */
HS_API hs_status hs_dataset_truth_json(const hs_dataset* data, char** out);
HS_API hs_status hs_dataset_warnings_json(const hs_dataset* data, char** out);
HS_API size_t hs_dataset_rows(const hs_dataset* data);
HS_API size_t hs_dataset_cols(const hs_dataset* data);
/* Random split; both halves keep the training normalization. */
HS_API hs_status hs_dataset_split(const hs_dataset* data, size_t n_train, uint64_t seed, hs_dataset** train,
                                  hs_dataset** test);
/* Replaces target's column normalization with source's (matching columns). */
HS_API hs_status hs_dataset_adopt_normalization(hs_dataset* target, const hs_dataset* source);
HS_API void hs_dataset_free(hs_dataset* data);

/* ---- LASSO path ---- */

/* Columns are scaled to unit empirical norm; center != 0 also removes column
 * and response means first. */
HS_API hs_status hs_path_compute(const hs_dataset* data, size_t stop_size, int center, hs_path** out);
HS_API hs_status hs_path_csv(const hs_path* path, char** out);
HS_API hs_status hs_path_thresholds_json(const hs_path* path, size_t mark, char** out);
HS_API int hs_path_stalled(const hs_path* path);
HS_API size_t hs_path_breakpoints(const hs_path* path);
HS_API hs_status hs_path_terminal_model(const hs_path* path, hs_model** out);
HS_API void hs_path_free(hs_path* path);

HS_API hs_status hs_default_penalty(size_t n, size_t p, double a, double* out);
HS_API hs_status hs_lasso_penalized(const hs_dataset* data, double r, int center, hs_model** out);

/* ---- sparse models and pruning ---- */

HS_API hs_status hs_model_from_json(const char* text, hs_model** out);
HS_API hs_status hs_model_to_json(const hs_model* model, char** out);
HS_API size_t hs_model_dimension(const hs_model* model);
HS_API size_t hs_model_nnz(const hs_model* model);
HS_API double hs_model_l1(const hs_model* model);
HS_API void hs_model_free(hs_model* model);

typedef struct hs_prune_options {
  hs_prune_strategy strategy;
  size_t k;
  uint64_t seed;
  /* Backward selection only: the design the model was fitted on. */
  const hs_dataset* data;
  int center;
} hs_prune_options;

/* trace_json may be NULL; it is filled for the randomized strategy and holds
 * an empty step list otherwise. */
HS_API hs_status hs_model_prune(const hs_model* model, const hs_prune_options* options, hs_model** out,
                                char** trace_json);

/* ---- hierarchical selection ---- */

typedef struct hs_hier_config {
  hs_basis_kind basis;
  size_t functions_per_variable;
  double ramp_spacing;
  size_t k_tilde;
  size_t k;
  size_t max_iterations;
  double r2_epsilon;
  hs_prune_strategy prune;
  double split_fraction;
  uint64_t seed;
  double collinear_tol;
  hs_collinear_scope collinear_scope;
} hs_hier_config;

HS_API void hs_hier_config_default(hs_hier_config* config);
HS_API hs_status hs_hier_config_to_json(const hs_hier_config* config, char** out);

HS_API hs_status hs_hier_run(const hs_dataset* data, const hs_hier_config* config, hs_hier_result** out);
HS_API size_t hs_hier_iterations(const hs_hier_result* result);
HS_API hs_status hs_hier_report_json(const hs_hier_result* result, char** out);
HS_API hs_status hs_hier_model_json(const hs_hier_result* result, char** out);
/* Writes rows(data) predictions into out (capacity len). */
HS_API hs_status hs_hier_predict(const hs_hier_result* result, const hs_dataset* data, double* out, size_t len);
HS_API hs_status hs_hier_test_correlation(const hs_hier_result* result, const hs_dataset* data, double* out);
HS_API void hs_hier_free(hs_hier_result* result);

#ifdef __cplusplus
}
#endif

#endif
