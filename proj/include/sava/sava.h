/*
 * sava: doubly-sequential selective inference with abstention.
 *
 * Plain C interface over the C++ engine. Every call returns a sava_status;
 * on failure the message is available from sava_last_error() on the same
 * thread until the next failing call.
 */
#ifndef SAVA_SAVA_H
#define SAVA_SAVA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SAVA_BUILDING)
#    define SAVA_API __declspec(dllexport)
#  else
#    define SAVA_API __declspec(dllimport)
#  endif
#else
#  define SAVA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sava_status {
  SAVA_OK = 0,
  SAVA_ERR_DOMAIN = 1,
  SAVA_ERR_OUT_OF_SUPPORT = 2,
  SAVA_ERR_PROTOCOL = 3,
  SAVA_ERR_INVARIANT = 4,
  SAVA_ERR_IO = 5,
  SAVA_ERR_PARSE = 6,
  SAVA_ERR_INVALID_ARGUMENT = 7,
  SAVA_ERR_UNSUPPORTED = 8,
  SAVA_ERR_USAGE = 9,
  SAVA_ERR_INTERNAL = 100
} sava_status;

SAVA_API const char* sava_version(void);
SAVA_API const char* sava_status_string(sava_status status);
SAVA_API const char* sava_last_error(void);

/* ---- engine ------------------------------------------------------------ */

typedef struct sava_engine sava_engine;

typedef enum sava_mode_kind {
  SAVA_MODE_SYMMETRIC = 0,
  SAVA_MODE_CLASSICAL = 1,
  SAVA_MODE_ARM_SPECIFIC = 2, /* alpha/k for arm A, alpha_b/k_b for arm B */
  SAVA_MODE_SAVASPECIAL = 3,
  SAVA_MODE_METHOD1 = 4,
  SAVA_MODE_METHOD2 = 5
} sava_mode_kind;

typedef struct sava_mode {
  sava_mode_kind kind;
  double alpha;
  size_t k;
  double alpha_b;
  size_t k_b;
} sava_mode;

typedef enum sava_evidence_kind {
  SAVA_EVIDENCE_HOEFFDING = 0,   /* observations in [-bound, bound] */
  SAVA_EVIDENCE_GAUSSIAN_LR = 1, /* N(+mu_abs,1) vs N(-mu_abs,1) */
  SAVA_EVIDENCE_DIRECT = 2       /* caller supplies p-values */
} sava_evidence_kind;

typedef struct sava_evidence {
  sava_evidence_kind kind;
  double bound;
  double alpha;
  double mu_abs;
} sava_evidence;

/* New observations for one task (1-based) at a decision time. */
typedef struct sava_batch {
  size_t task;
  const double* samples;
  size_t n_samples;
  int has_direct;
  double p_a;
  double p_b;
} sava_batch;

/* grid_times strictly increasing; arrivals[j-1] is task j's arrival, non-decreasing. */
SAVA_API sava_status sava_engine_create(const sava_mode* mode, const sava_evidence* evidence,
                                        const int64_t* grid_times, size_t n_times,
                                        const int64_t* arrivals, size_t n_tasks,
                                        sava_engine** out);
SAVA_API void sava_engine_destroy(sava_engine* engine);

SAVA_API sava_status sava_engine_step(sava_engine* engine, int64_t t, const sava_batch* batches,
                                      size_t n_batches);
/* Next decision time; *done is set to 1 once the grid is exhausted. */
SAVA_API sava_status sava_engine_next_time(const sava_engine* engine, int64_t* t, int* done);
/* Tasks active at the next decision time, ascending. Writes at most cap ids. */
SAVA_API sava_status sava_engine_upcoming(const sava_engine* engine, size_t* ids, size_t cap,
                                          size_t* count);
/* Decision of task j as one of 'A', 'B', 'C', 'D'. */
SAVA_API sava_status sava_engine_decision(const sava_engine* engine, size_t task, char* decision);
SAVA_API sava_status sava_engine_pvalues(const sava_engine* engine, size_t task, double* p_a,
                                         double* p_b);
SAVA_API sava_status sava_engine_levels(const sava_engine* engine, size_t task, double* level_a,
                                        double* level_b);
/* Conservative FSR estimate after the latest step (0 before the first). */
SAVA_API sava_status sava_engine_fsr_hat(const sava_engine* engine, double* value);
SAVA_API sava_status sava_engine_selected(const sava_engine* engine, size_t* n_a, size_t* n_b);

/* ---- evidence helpers -------------------------------------------------- */

SAVA_API sava_status sava_lambda(uint64_t r, double alpha, double* value);
SAVA_API sava_status sava_wilcoxon(const double* xs, size_t n, double* p_a, double* p_b);
SAVA_API sava_status sava_ztest(const double* xs, size_t n, double sigma, double* p_a,
                                double* p_b);

/* ---- experiments ------------------------------------------------------- */

/* Runs a JSON run request (simulate, counterexample, sweep-k, ingest-run,
 * report), writes its outputs and returns a JSON summary in *summary, to be
 * released with sava_string_free. summary may be NULL. */
SAVA_API sava_status sava_run(const char* request_json, char** summary);
SAVA_API void sava_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* SAVA_SAVA_H */
