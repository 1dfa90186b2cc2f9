/* svgpc - sparse variational Gaussian process classification.
 *
 * C API over the core library: opaque handles, integer status codes,
 * thread-local error messages. All functions returning int yield SVGPC_OK
 * (0) on success; on failure they return a nonzero status and leave a
 * human-readable message in svgpc_last_error().
 *
 * Matrices cross the boundary as row-major double buffers allocated by the
 * caller. Configuration crosses as flat "key = value" text, one pair per
 * line ('#' starts a comment), identical to the CLI config-file format.
 */

#ifndef SVGPC_H
#define SVGPC_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define SVGPC_API __declspec(dllexport)
#else
#define SVGPC_API __attribute__((visibility("default")))
#endif

enum {
  SVGPC_OK = 0,
  SVGPC_ERROR_INVALID_ARGUMENT = 1,
  SVGPC_ERROR_IO = 2,
  SVGPC_ERROR_PARSE = 3,
  SVGPC_ERROR_NUMERIC = 4,
  SVGPC_ERROR_DIMENSION = 5,
  SVGPC_ERROR_INTERNAL = 6
};

typedef struct svgpc_dataset svgpc_dataset;
typedef struct svgpc_model svgpc_model;

/* message for the most recent failure on this thread; never NULL */
SVGPC_API const char* svgpc_last_error(void);
SVGPC_API const char* svgpc_status_name(int status);
SVGPC_API const char* svgpc_version(void);

/* ---- datasets ---------------------------------------------------------- */

/* label_column < 0 selects the last column */
SVGPC_API int svgpc_dataset_load_csv(const char* path, int label_column, svgpc_dataset** out);

/* header_comment: optional provenance lines (separated by '\n'), each
 * written as a leading '#' line; pass NULL for none */
SVGPC_API int svgpc_dataset_save_csv(const svgpc_dataset* ds, const char* path,
                                     const char* header_comment);

SVGPC_API int svgpc_dataset_gen_two_moons(long n, double noise, unsigned long long seed,
                                          svgpc_dataset** out);

/* kernel/lengthscale/variance use the config syntax, e.g. "rbf", "1.0", "5.0" */
SVGPC_API int svgpc_dataset_gen_gp_multiclass(long n, int classes, const char* kernel,
                                              const char* lengthscale, const char* variance,
                                              unsigned long long seed, svgpc_dataset** out);

SVGPC_API int svgpc_dataset_rows(const svgpc_dataset* ds, long* out);
SVGPC_API int svgpc_dataset_cols(const svgpc_dataset* ds, long* out);
SVGPC_API int svgpc_dataset_classes(const svgpc_dataset* ds, int* out);

/* seed-deterministic disjoint split; round(n * test_fraction) test rows */
SVGPC_API int svgpc_dataset_split(const svgpc_dataset* ds, double test_fraction,
                                  unsigned long long seed, int stratified,
                                  svgpc_dataset** train_out, svgpc_dataset** test_out);

SVGPC_API void svgpc_dataset_free(svgpc_dataset* ds);

/* ---- training ----------------------------------------------------------- */

/* Trains a model described by config_text on the dataset, then writes the
 * checkpoint (and, when trace_path is non-NULL, the iteration trace CSV).
 * Both artifacts carry the fully resolved configuration for provenance. */
SVGPC_API int svgpc_train(const char* config_text, const svgpc_dataset* data,
                          const char* checkpoint_path, const char* trace_path);

/* ---- models -------------------------------------------------------------- */

SVGPC_API int svgpc_model_load(const char* path, svgpc_model** out);
SVGPC_API int svgpc_model_classes(const svgpc_model* model, int* out);
SVGPC_API int svgpc_model_dim(const svgpc_model* model, long* out);
SVGPC_API int svgpc_model_latents(const svgpc_model* model, int* out);
/* original label value of class index c (0-based) */
SVGPC_API int svgpc_model_label(const svgpc_model* model, int class_index, double* out);

/* Predictive class probabilities and latent marginals at n points.
 * X: n x d row-major (original feature space; any stored normalization is
 * applied internally). probs: n x C, mu/var: n x L, row-major; each of the
 * three buffers may be NULL if not wanted. mc_samples only affects softmax
 * models. */
SVGPC_API int svgpc_model_predict(const svgpc_model* model, const double* X, long n, long d,
                                  int mc_samples, unsigned long long seed, double* probs,
                                  double* mu, double* var);

/* Prediction over a dataset handle with label reconciliation against the
 * checkpoint's label map. Writes a JSON report when report_path is
 * non-NULL; accuracy/mean_nll outputs may be NULL. */
SVGPC_API int svgpc_model_evaluate(const svgpc_model* model, const svgpc_dataset* test,
                                   int mc_samples, unsigned long long seed,
                                   const char* report_path, double* accuracy, double* mean_nll);

/* Probability surface over a 2-D box for contour plotting: writes a
 * resolution^2-row CSV (x1, x2, p_class1..C) plus a CSV of the optimized
 * inducing locations. Only valid for models with 2-D inputs. */
SVGPC_API int svgpc_model_grid(const svgpc_model* model, double x1_min, double x1_max,
                               double x2_min, double x2_max, int resolution, int mc_samples,
                               unsigned long long seed, const char* grid_csv_path,
                               const char* inducing_csv_path);

SVGPC_API void svgpc_model_free(svgpc_model* model);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SVGPC_H */
