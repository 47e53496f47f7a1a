#ifndef GDPA_H
#define GDPA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GdpaStatus {
  GDPA_STATUS_OK = 0,
  GDPA_STATUS_NULL_POINTER = 1,
  GDPA_STATUS_INVALID_ARGUMENT = 2,
  GDPA_STATUS_NUMERICAL_FAILURE = 3,
  GDPA_STATUS_UNSUPPORTED = 4,
  GDPA_STATUS_PANIC = 5,
} GdpaStatus;

/**
 * Which vector `gdpa_result_vector` copies.
 */
typedef enum GdpaVector {
  GDPA_VECTOR_X_FINAL = 0,
  GDPA_VECTOR_LAMBDA_FINAL = 1,
  GDPA_VECTOR_X_AVERAGE = 2,
  GDPA_VECTOR_LAMBDA_AVERAGE = 3,
} GdpaVector;

typedef enum GdpaTermination {
  GDPA_TERMINATION_FEASIBILITY_STOP = 0,
  GDPA_TERMINATION_BUDGET_EXHAUSTED = 1,
  GDPA_TERMINATION_NUMERICAL_FAILURE = 2,
} GdpaTermination;

/**
 * Opaque problem handle.
 */
typedef struct GdpaProblem GdpaProblem;

/**
 * Opaque result handle.
 */
typedef struct GdpaResult GdpaResult;

/**
 * Solver parameters; obtain defaults from `gdpa_config_default`.
 */
typedef struct GdpaSolverConfig {
  double tau;
  double beta0;
  double alpha01;
  double alpha02;
  double alpha03;
  uint64_t max_iters;
  double eps_feas;
  double eps_stat;
  uint64_t record_every;
  uint64_t record_dense_until;
  uint64_t seed;
} GdpaSolverConfig;

/**
 * Returns `f(x)`; `x` has `dim` entries.
 */
typedef double (*GdpaScalarFn)(const double *x, size_t dim, void *user_data);

/**
 * Writes `out_len` values into `out`: the gradient (`dim`), the constraint
 * values (`m`) or the row-major Jacobian (`m * dim`).
 */
typedef void (*GdpaVectorFn)(const double *x,
                             size_t dim,
                             double *out,
                             size_t out_len,
                             void *user_data);

/**
 * One trace row.
 */
typedef struct GdpaIterationRecord {
  uint64_t r;
  double alpha;
  double beta;
  double gamma;
  double f;
  double f_beta;
  double stationarity_sq;
  double feasibility;
  double slackness;
  double lambda_norm;
} GdpaIterationRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *gdpa_last_error_message(void);

struct GdpaSolverConfig gdpa_config_default(void);

/**
 * Builds a bundled analytic problem: `"halfspace-quadratic"`,
 * `"circle-exterior"` or `"scaled-1d"`.
 *
 * # Safety
 * `id` must be a NUL-terminated string and `out` a writable pointer.
 */
enum GdpaStatus gdpa_problem_analytic(const char *id, struct GdpaProblem **out);

/**
 * Builds a problem from callbacks. `constraints` and `jacobian` may be null
 * only when `num_constraints` is 0.
 *
 * # Safety
 * The callbacks must be valid for the lifetime of the handle and safe to
 * call with `user_data`; `out` must be writable.
 */
enum GdpaStatus gdpa_problem_from_callbacks(size_t dim,
                                            size_t num_constraints,
                                            GdpaScalarFn objective,
                                            GdpaVectorFn gradient,
                                            GdpaVectorFn constraints,
                                            GdpaVectorFn jacobian,
                                            void *user_data,
                                            struct GdpaProblem **out);

/**
 * Restricts the problem to the box `[lower, upper]`; infinite bounds are allowed.
 *
 * # Safety
 * `problem` must be a live handle and both arrays must hold `dim` doubles.
 */
enum GdpaStatus gdpa_problem_set_box(struct GdpaProblem *problem,
                                     const double *lower,
                                     const double *upper,
                                     size_t dim);

/**
 * # Safety
 * `problem` must be null or a handle not yet freed.
 */
void gdpa_problem_free(struct GdpaProblem *problem);

/**
 * Runs the solver from `x0` (length `dim`) with zero initial multipliers.
 * A numerical failure during the iterations still yields a result whose
 * termination is `GDPA_TERMINATION_NUMERICAL_FAILURE`.
 *
 * # Safety
 * Pointers must be valid; `out` receives a handle to free with `gdpa_result_free`.
 */
enum GdpaStatus gdpa_solve(const struct GdpaProblem *problem,
                           const struct GdpaSolverConfig *config,
                           const double *x0,
                           size_t dim,
                           struct GdpaResult **out);

/**
 * # Safety
 * `result` must be null or a handle not yet freed.
 */
void gdpa_result_free(struct GdpaResult *result);

/**
 * Length of the requested vector, or 0 for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
size_t gdpa_result_vector_len(const struct GdpaResult *result, enum GdpaVector which);

/**
 * Copies a result vector into `out`, which must hold exactly
 * `gdpa_result_vector_len` values.
 *
 * # Safety
 * `result` must be a live handle and `out` writable for `len` doubles.
 */
enum GdpaStatus gdpa_result_vector(const struct GdpaResult *result,
                                   enum GdpaVector which,
                                   double *out,
                                   size_t len);

/**
 * # Safety
 * `result` must be a live handle; `out` must be writable.
 */
enum GdpaStatus gdpa_result_termination(const struct GdpaResult *result, enum GdpaTermination *out);

/**
 * First iteration at which the squared violation fell below `eps_feas`,
 * or -1 if it never did. Returns -1 for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
int64_t gdpa_result_t_eps(const struct GdpaResult *result);

/**
 * Iterations executed, or 0 for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
uint64_t gdpa_result_iterations(const struct GdpaResult *result);

/**
 * # Safety
 * `result` must be null or a live handle.
 */
size_t gdpa_result_trace_len(const struct GdpaResult *result);

/**
 * # Safety
 * `result` must be a live handle; `out` must be writable.
 */
enum GdpaStatus gdpa_result_trace_record(const struct GdpaResult *result,
                                         size_t index,
                                         struct GdpaIterationRecord *out);

/**
 * Central-difference check at `num_points` points stored row-major in
 * `points`. Writes the largest relative gradient error, and the largest
 * Jacobian error (0 without constraints).
 *
 * # Safety
 * `points` must hold `num_points * dim` doubles; outputs must be writable.
 */
enum GdpaStatus gdpa_check_gradients(const struct GdpaProblem *problem,
                                     const double *points,
                                     size_t num_points,
                                     double h,
                                     double *gradient_error,
                                     double *jacobian_error);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GDPA_H */
