#ifndef TEPCOMP_H
#define TEPCOMP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every call.
 */
typedef enum TepStatus {
  TEP_STATUS_OK = 0,
  /*
   A required pointer argument was null.
   */
  TEP_STATUS_NULL_POINTER = 1,
  /*
   Arguments or input data were rejected.
   */
  TEP_STATUS_INVALID_INPUT = 2,
  /*
   A file could not be read or parsed.
   */
  TEP_STATUS_IO = 3,
  /*
   The solver or a calibration failed numerically.
   */
  TEP_STATUS_NUMERICAL = 4,
  /*
   The quantity is undefined for these inputs, e.g. a correlation with a
   constant series.
   */
  TEP_STATUS_UNDEFINED = 5,
  /*
   An internal panic was caught at the boundary.
   */
  TEP_STATUS_INTERNAL = 6,
} TepStatus;

/*
 A loaded instance: network, scenarios and run settings.
 */
typedef struct TepModel TepModel;

/*
 A solved plan.
 */
typedef struct TepSolution TepSolution;

/*
 Linear curve `price = intercept + slope * quantity`.
 */
typedef struct TepCurve {
  double intercept;
  double slope;
} TepCurve;

/*
 Closed-form two-node market with a line of fixed capacity.
 */
typedef struct TepTwoNode {
  double autarky_price[2];
  double price[2];
  /*
   Flow from node 2 to node 1.
   */
  double flow;
  double welfare_gain[2];
  double congestion_rent;
} TepTwoNode;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the last error message of this thread into `buf` as a
 NUL-terminated string, truncating if needed. Returns the full message
 length in bytes, excluding the terminator.

 # Safety
 `buf` must be null or point to `len` writable bytes.
 */
size_t tep_last_error_message(char *buf, size_t len);

/*
 # Safety
 `out` must be null or point to a writable `TepTwoNode`.
 */
enum TepStatus tep_analytic_two_node(struct TepCurve d1,
                                     struct TepCurve s1,
                                     struct TepCurve d2,
                                     struct TepCurve s2,
                                     double capacity,
                                     struct TepTwoNode *out);

/*
 Conditional value at risk of the upper `1 - alpha` tail of `x` under the
 probabilities `p`.

 # Safety
 `x` and `p` must point to `n` readable values; `out` must be writable.
 */
enum TepStatus tep_cvar(const double *x, const double *p, size_t n, double alpha, double *out);

/*
 Probability-weighted population standard deviation.

 # Safety
 `x` and `p` must point to `n` readable values; `out` must be writable.
 */
enum TepStatus tep_std_dev(const double *x, const double *p, size_t n, double *out);

/*
 Probability-weighted Pearson correlation. Returns `Undefined` when either
 series is constant.

 # Safety
 `x`, `y` and `p` must point to `n` readable values; `out` must be writable.
 */
enum TepStatus tep_correlation(const double *x,
                               const double *y,
                               const double *p,
                               size_t n,
                               double *out);

/*
 Loads the instance described by a key/value config file.

 # Safety
 `config_path` must be a NUL-terminated string; `out` must be writable.
 */
enum TepStatus tep_model_load(const char *config_path, struct TepModel **out);

/*
 # Safety
 `model` must be null or a handle from [`tep_model_load`] not yet freed.
 */
void tep_model_free(struct TepModel *model);

/*
 Writes the number of nodes, scenarios and periods.

 # Safety
 `model` must be a live handle; the out-pointers must be null or writable.
 */
enum TepStatus tep_model_dims(const struct TepModel *model,
                              size_t *n_nodes,
                              size_t *n_scenarios,
                              size_t *n_periods);

/*
 Solves the planner problem. When `deny_line` is non-null that line may not
 be expanded; otherwise every expandable asset is open.

 # Safety
 `model` must be a live handle, `deny_line` null or a NUL-terminated string,
 and `out` writable.
 */
enum TepStatus tep_model_solve(const struct TepModel *model,
                               const char *deny_line,
                               struct TepSolution **out);

/*
 # Safety
 `solution` must be null or a handle from [`tep_model_solve`] not yet freed.
 */
void tep_solution_free(struct TepSolution *solution);

/*
 Expected net total welfare (EUR/yr) and the largest relative KKT residual.

 # Safety
 `solution` must be a live handle; the out-pointers must be null or writable.
 */
enum TepStatus tep_solution_objective(const struct TepSolution *solution,
                                      double *objective,
                                      double *kkt_residual);

/*
 Nodal price in EUR/MWh.

 # Safety
 `solution` must be a live handle, `node_id` a NUL-terminated string and
 `out` writable.
 */
enum TepStatus tep_solution_price(const struct TepSolution *solution,
                                  const char *node_id,
                                  size_t scenario,
                                  size_t period,
                                  double *out);

/*
 Capacity added to a line, MW.

 # Safety
 `solution` must be a live handle, `line_id` a NUL-terminated string and
 `out` writable.
 */
enum TepStatus tep_solution_line_expansion(const struct TepSolution *solution,
                                           const char *line_id,
                                           double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TEPCOMP_H */
