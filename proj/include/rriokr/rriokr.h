/* C interface to the rriokr library. All arrays are row-major doubles. */
#ifndef RRIOKR_H
#define RRIOKR_H

#include <stddef.h>
#include <stdint.h>

#if defined(__GNUC__)
#define RRIOKR_API __attribute__((visibility("default")))
#else
#define RRIOKR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  RRIOKR_OK = 0,
  RRIOKR_USAGE = 1,
  RRIOKR_DATA = 2,
  RRIOKR_NUMERIC = 3,
  RRIOKR_INTERNAL = 4
} rriokr_status;

typedef enum { RRIOKR_SUPERVISED = 0, RRIOKR_UNSUPERVISED = 1 } rriokr_provenance;

typedef enum { RRIOKR_REDUCED = 0, RRIOKR_FULLRANK = 1 } rriokr_variant;

typedef struct rriokr_model rriokr_model;

typedef struct {
  int64_t n_train;
  int64_t input_dim;
  int64_t output_dim;
  int64_t rank;
  int64_t requested_rank;
  double lambda1;
  double lambda2;
} rriokr_model_info;

RRIOKR_API const char* rriokr_version(void);

/* Message of the last failure on the calling thread ("" if none). */
RRIOKR_API const char* rriokr_last_error(void);

RRIOKR_API rriokr_status rriokr_set_threads(int threads);

/* Kernels are "linear", "gaussian:<sigma2>" or "tanimoto:<sigma2>". */
RRIOKR_API rriokr_status rriokr_model_train(const double* x, int64_t n, int64_t dx, const double* y,
                                 int64_t dy, const char* input_kernel, const char* output_kernel,
                                 double lambda1, double lambda2, int64_t p,
                                 rriokr_provenance provenance, rriokr_model** out);

RRIOKR_API rriokr_status rriokr_model_load(const char* path, rriokr_model** out);
RRIOKR_API rriokr_status rriokr_model_save(const rriokr_model* model, const char* path);
RRIOKR_API void rriokr_model_free(rriokr_model* model);
RRIOKR_API rriokr_status rriokr_model_info_get(const rriokr_model* model, rriokr_model_info* info);

/* Top-k decoding of m test inputs against n_c candidate outputs (NULL means
 * the training outputs). ids and distances are m × k; slots beyond the
 * candidate count hold -1 and NaN. */
RRIOKR_API rriokr_status rriokr_model_decode(const rriokr_model* model, const double* x_test, int64_t m,
                                  const double* candidates, int64_t n_c, int64_t k,
                                  rriokr_variant variant, int64_t* ids, double* distances);

/* Runs a CLI command with a JSON config, writing its files under out_dir. */
RRIOKR_API rriokr_status rriokr_run_command(const char* command, const char* config_json,
                                 const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif
