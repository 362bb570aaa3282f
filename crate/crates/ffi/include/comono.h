#ifndef COMONO_H
#define COMONO_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum ComonoStatus {
  COMONO_STATUS_OK = 0,
  COMONO_STATUS_NULL_POINTER = 1,
  COMONO_STATUS_INVALID_ARGUMENT = 2,
  COMONO_STATUS_NUMERIC_FAILURE = 3,
  COMONO_STATUS_DIMENSION_MISMATCH = 4,
  COMONO_STATUS_MISSING_SAMPLER = 5,
  COMONO_STATUS_PANIC = 6,
} ComonoStatus;

typedef enum ComonoAlgorithm {
  COMONO_ALGORITHM_HALPERN = 0,
  COMONO_ALGORITHM_KM = 1,
  COMONO_ALGORITHM_HALPERN_STOCH = 2,
  COMONO_ALGORITHM_KM_MLMC = 3,
} ComonoAlgorithm;

/**
 * Opaque problem handle.
 */
typedef struct ComonoProblem ComonoProblem;

/**
 * Opaque solve report handle.
 */
typedef struct ComonoReport ComonoReport;

/**
 * Outer-loop parameters. `budget_scale = 1` runs the full inner budgets.
 */
typedef struct ComonoParams {
  /**
   * A `ComonoAlgorithm` value.
   */
  uint32_t algorithm;
  double eta;
  double rho;
  size_t k_max;
  uint64_t seed;
  double budget_scale;
} ComonoParams;

/**
 * One outer iteration. Absent optional values are NaN.
 */
typedef struct ComonoTraceRow {
  size_t k;
  uint64_t inner_iters;
  uint64_t cum_oracle_calls;
  double residual_estimate;
  double dist_to_solution;
} ComonoTraceRow;

/**
 * Inner budget at one outer step. `draws` is 0 and `alpha_ratio` NaN except
 * for `KmMlmc`.
 */
typedef struct ComonoBudget {
  uint64_t inner;
  uint64_t draws;
  double alpha_ratio;
} ComonoBudget;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * `F(x) = L·Q_θ·x` with block-diagonal planar rotations; `dim` must be even.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum ComonoStatus comono_problem_rotation(double lipschitz,
                                          double theta,
                                          size_t dim,
                                          struct ComonoProblem **out);

/**
 * Bilinear game `min_x max_y xᵀAy` over two simplices, with `A` given
 * row-major as `rows × cols`.
 *
 * # Safety
 * `a` must point to `rows * cols` doubles and `out` to storage for one handle.
 */
enum ComonoStatus comono_problem_matrix_game(const double *a,
                                             size_t rows,
                                             size_t cols,
                                             struct ComonoProblem **out);

/**
 * `F(x) = Mx + b` plus `λ‖x‖₁` (no regularizer when `l1_lambda = 0`), with
 * `M` given row-major as `dim × dim`.
 *
 * # Safety
 * `m` must point to `dim * dim` doubles, `b` to `dim` doubles and `out` to
 * storage for one handle.
 */
enum ComonoStatus comono_problem_affine(const double *m,
                                        const double *b,
                                        size_t dim,
                                        double l1_lambda,
                                        struct ComonoProblem **out);

/**
 * The bundled 2×2 ratio game.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum ComonoStatus comono_problem_ratio_game_shipped(struct ComonoProblem **out);

/**
 * Attaches Gaussian oracle noise with `E‖F̃(x) − F(x)‖² = σ²`; `σ = 0`
 * gives an exact sampler.
 *
 * # Safety
 * `problem` must be a live handle or null.
 */
enum ComonoStatus comono_problem_set_noise(struct ComonoProblem *problem, double sigma);

/**
 * Dimension of the problem, or 0 for a null handle.
 *
 * # Safety
 * `problem` must be a live handle or null.
 */
size_t comono_problem_dim(const struct ComonoProblem *problem);

/**
 * Lipschitz constant of `F`, or NaN for a null handle.
 *
 * # Safety
 * `problem` must be a live handle or null.
 */
double comono_problem_lipschitz(const struct ComonoProblem *problem);

/**
 * Structure constant `ρ` attached to the problem, or NaN for a null handle.
 *
 * # Safety
 * `problem` must be a live handle or null.
 */
double comono_problem_rho(const struct ComonoProblem *problem);

/**
 * # Safety
 * `problem` must be a handle from this library or null, and must not be
 * used afterwards.
 */
void comono_problem_free(struct ComonoProblem *problem);

/**
 * Runs an outer loop from `x0` and stores the report in `*out`.
 *
 * # Safety
 * `problem` must be a live handle, `params` valid, `x0` must point to `dim`
 * doubles and `out` to storage for one handle.
 */
enum ComonoStatus comono_solve(const struct ComonoProblem *problem,
                               const struct ComonoParams *params,
                               const double *x0,
                               size_t dim,
                               struct ComonoReport **out);

/**
 * Number of trace rows (`K`), or 0 for a null handle.
 *
 * # Safety
 * `report` must be a live handle or null.
 */
size_t comono_report_len(const struct ComonoReport *report);

/**
 * # Safety
 * `report` must be a live handle and `out` valid for one row.
 */
enum ComonoStatus comono_report_row(const struct ComonoReport *report,
                                    size_t index,
                                    struct ComonoTraceRow *out);

/**
 * Copies `x_k` for `k ∈ [0, K]` into `out`.
 *
 * # Safety
 * `report` must be a live handle and `out` must point to `dim` doubles.
 */
enum ComonoStatus comono_report_iterate(const struct ComonoReport *report,
                                        size_t k,
                                        double *out,
                                        size_t dim);

/**
 * Copies `x_K` into `out`.
 *
 * # Safety
 * `report` must be a live handle and `out` must point to `dim` doubles.
 */
enum ComonoStatus comono_report_final_iterate(const struct ComonoReport *report,
                                              double *out,
                                              size_t dim);

/**
 * # Safety
 * `report` must be a handle from this library or null, and must not be used
 * afterwards.
 */
void comono_report_free(struct ComonoReport *report);

/**
 * Fixed-point residual `‖x − J(x)‖/η` with the resolvent computed to `tol`.
 *
 * # Safety
 * `problem` must be a live handle, `x` must point to `dim` doubles and `out`
 * to one double.
 */
enum ComonoStatus comono_residual(const struct ComonoProblem *problem,
                                  const double *x,
                                  size_t dim,
                                  double eta,
                                  double tol,
                                  double *out);

/**
 * Inner budget of `algorithm` (a `ComonoAlgorithm` value) at outer step
 * `k` for `ηL ∈ [0, 1)`.
 *
 * # Safety
 * `out` must be valid for one budget.
 */
enum ComonoStatus comono_budget(uint32_t algorithm,
                                uint64_t k,
                                double eta_l,
                                struct ComonoBudget *out);

/**
 * Message of the last failed call on this thread (empty after a success).
 * Valid until the next call on the same thread.
 */
const char *comono_last_error_message(void);

const char *comono_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COMONO_H */
