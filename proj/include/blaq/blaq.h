/* C interface to the blaq quantization-aware training library. */
#ifndef BLAQ_BLAQ_H
#define BLAQ_BLAQ_H

#include <stddef.h>

#if defined(_WIN32)
#define BLAQ_API __declspec(dllexport)
#else
#define BLAQ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum blaq_status {
  BLAQ_OK = 0,
  BLAQ_ERR_INVALID_ARGUMENT = 1,
  BLAQ_ERR_CONFIG = 2,
  BLAQ_ERR_FORMAT = 3,
  BLAQ_ERR_IO = 4,
  BLAQ_ERR_SHAPE = 5,
  BLAQ_ERR_NUMERIC = 6,
  BLAQ_ERR_STATE = 7,
  BLAQ_ERR_DOMAIN = 8,
  BLAQ_ERR_UNSUPPORTED = 9,
  BLAQ_ERR_BUFFER_TOO_SMALL = 10,
  BLAQ_ERR_NOT_FOUND = 11,
  BLAQ_ERR_INTERNAL = 12
} blaq_status;

typedef enum blaq_optimizer {
  BLAQ_OPT_LAQ = 0,
  BLAQ_OPT_BLAQ = 1,
  BLAQ_OPT_FULL_PRECISION = 2
} blaq_optimizer;

BLAQ_API const char* blaq_version(void);
BLAQ_API const char* blaq_status_name(blaq_status status);
/* Message for the last failed call on this thread; "" if none. */
BLAQ_API const char* blaq_last_error(void);

/* ---- experiment runs ---------------------------------------------------- */

typedef struct blaq_run blaq_run;

/* experiment: "toy2d", "toy-pow32", "train-mnist" or "theory-check". */
BLAQ_API blaq_status blaq_run_create(const char* experiment, blaq_run** out);
BLAQ_API void blaq_run_destroy(blaq_run* run);
BLAQ_API blaq_status blaq_run_load_config(blaq_run* run, const char* path);
/* value is JSON text or a bare string, e.g. ("eta_schedule", "[[0, 0.2]]"). */
BLAQ_API blaq_status blaq_run_set(blaq_run* run, const char* key, const char* value);
BLAQ_API blaq_status blaq_run_execute(blaq_run* run);

/* Copy text into buf (NUL-terminated). *needed receives the size including NUL. */
BLAQ_API blaq_status blaq_run_config_json(const blaq_run* run, char* buf, size_t cap, size_t* needed);
BLAQ_API blaq_status blaq_run_metrics_json(const blaq_run* run, char* buf, size_t cap, size_t* needed);

/* *ok is 1 when every check passed, or when the run's "strict" option is off. */
BLAQ_API blaq_status blaq_run_verdict(const blaq_run* run, int* ok);
BLAQ_API blaq_status blaq_run_check_count(const blaq_run* run, size_t* total, size_t* failed);
/* Strings stay valid until the run is executed again or destroyed. */
BLAQ_API blaq_status blaq_run_check(const blaq_run* run, size_t index, const char** name, int* passed,
                                    const char** detail);
BLAQ_API blaq_status blaq_run_metric(const blaq_run* run, const char* name, double* out);

/* ---- primitives --------------------------------------------------------- */

/* Scaled projection of w onto alpha * beta with beta on the k-bit grid. */
BLAQ_API blaq_status blaq_project(const double* w, const double* d, size_t n, int bits, int m, double* alpha,
                                  double* beta);
BLAQ_API double blaq_nearest_level(int bits, double x);
BLAQ_API double blaq_theorem1_bound(double L1, double mu, double eta, double delta);
/* *empty is 1 when no mixing coefficient qualifies. */
BLAQ_API blaq_status blaq_theorem2_region(double L1, double eta, double* lo, double* hi, int* empty);

/* ---- single-layer stepping with a caller-supplied gradient ------------- */

/* Writes the gradient at w into grad and returns the loss there.
   Return a non-finite value to abort the step. */
typedef double (*blaq_gradient_fn)(const double* w, double* grad, size_t n, void* user);

typedef struct blaq_layer_options {
  int bits;
  int m;
  double a;
  double eta;
  double beta2;
  double eps;
  int identity_metric; /* nonzero: D = 1 / eta */
} blaq_layer_options;

typedef struct blaq_layer blaq_layer;

BLAQ_API void blaq_layer_options_default(blaq_layer_options* opts);
BLAQ_API blaq_status blaq_layer_create(const double* w0, size_t n, blaq_optimizer optimizer,
                                       const blaq_layer_options* opts, blaq_layer** out);
BLAQ_API void blaq_layer_destroy(blaq_layer* layer);
BLAQ_API size_t blaq_layer_dim(const blaq_layer* layer);
BLAQ_API blaq_status blaq_layer_step(blaq_layer* layer, blaq_gradient_fn fn, void* user, double* loss);
/* Any output pointer may be NULL. */
BLAQ_API blaq_status blaq_layer_state(const blaq_layer* layer, double* w, double* w_hat, double* alpha);
BLAQ_API blaq_status blaq_layer_gradient_calls(const blaq_layer* layer, unsigned long long* calls);

#ifdef __cplusplus
}
#endif

#endif
