/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef PARTPRUNE_H
#define PARTPRUNE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum PpStatus {
  PP_STATUS_OK = 0,
  PP_STATUS_NULL_POINTER = 1,
  PP_STATUS_INVALID_ARGUMENT = 2,
  PP_STATUS_INFEASIBLE = 3,
  PP_STATUS_BUDGET_EXCEEDED = 4,
  PP_STATUS_IO = 5,
  PP_STATUS_FORMAT = 6,
  PP_STATUS_VERIFICATION_FAILED = 7,
  PP_STATUS_PANIC = 99,
} PpStatus;

/**
 * A pruning result.
 */
typedef struct PpResult PpResult;

/**
 * A weight matrix.
 */
typedef struct PpWeights PpWeights;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *pp_last_error_message(void);

/**
 * Copies `rows * cols` row-major values into a new matrix.
 *
 * # Safety
 * `values` must point to `rows * cols` doubles; `out` must be writable.
 */
enum PpStatus pp_weights_new(size_t rows,
                             size_t cols,
                             const double *values,
                             struct PpWeights **out_weights);

/**
 * Reads a CSV or BPWM matrix file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out_weights` must be writable.
 */
enum PpStatus pp_weights_load(const char *path, struct PpWeights **out_weights);

/**
 * # Safety
 * `weights` must be null or a live handle.
 */
size_t pp_weights_rows(const struct PpWeights *weights);

/**
 * # Safety
 * `weights` must be null or a live handle.
 */
size_t pp_weights_cols(const struct PpWeights *weights);

/**
 * # Safety
 * `weights` must be null or a handle not yet freed.
 */
void pp_weights_free(struct PpWeights *weights);

/**
 * Best of `restarts` greedy runs, optionally refined by swaps.
 *
 * # Safety
 * `weights` must be a live handle; `out_result` must be writable.
 */
enum PpStatus pp_prune(const struct PpWeights *weights,
                       size_t p,
                       size_t restarts,
                       uint64_t seed,
                       bool refine,
                       struct PpResult **out_result);

/**
 * # Safety
 * `result` must be null or a handle not yet freed.
 */
void pp_result_free(struct PpResult *result);

/**
 * Sum of absolute pruned weights; NaN for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
double pp_result_weight_loss(const struct PpResult *result);

/**
 * Surviving links over all links; NaN for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
double pp_result_ratio(const struct PpResult *result);

/**
 * # Safety
 * `result` must be null or a live handle.
 */
size_t pp_result_connectedness(const struct PpResult *result);

/**
 * # Safety
 * `result` must be null or a live handle.
 */
size_t pp_result_partitions(const struct PpResult *result);

/**
 * Copies the 0-based partition label of every row into `buf`, which must
 * hold exactly the number of rows.
 *
 * # Safety
 * `buf` must point to `len` writable `size_t`s.
 */
enum PpStatus pp_result_row_partition(const struct PpResult *result, size_t *buf, size_t len);

/**
 * Column counterpart of [`pp_result_row_partition`].
 *
 * # Safety
 * `buf` must point to `len` writable `size_t`s.
 */
enum PpStatus pp_result_col_partition(const struct PpResult *result, size_t *buf, size_t len);

/**
 * The result in the JSON result-file format. Free with [`pp_string_free`].
 *
 * # Safety
 * `result` must be a live handle; `out_json` must be writable.
 */
enum PpStatus pp_result_to_json(const struct PpResult *result, char **out_json);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void pp_string_free(char *s);

/**
 * Exhaustive minimum weight loss; fails with `PP_STATUS_BUDGET_EXCEEDED`
 * when more than `budget` candidates would be enumerated.
 *
 * # Safety
 * `weights` must be a live handle; `out_loss` must be writable.
 */
enum PpStatus pp_oracle(const struct PpWeights *weights,
                        size_t p,
                        uint64_t budget,
                        double *out_loss);

/**
 * Checks `result` against `weights`: balance rules, then `trials`
 * partitioned-versus-masked products. A broken rule or a mismatch returns
 * `PP_STATUS_VERIFICATION_FAILED`; `out_max_rel_err` is written when
 * non-null.
 *
 * # Safety
 * Handles must be live; `out_max_rel_err` must be null or writable.
 */
enum PpStatus pp_verify(const struct PpWeights *weights,
                        const struct PpResult *result,
                        size_t trials,
                        double tolerance,
                        uint64_t seed,
                        double *out_max_rel_err);

/**
 * Speedup and energy ratio of a `rows x cols` layer split into `p` blocks
 * on `p` accelerators, against the dense layer on one. `config_json` is a
 * simulator config document, or null for defaults.
 *
 * # Safety
 * `config_json` must be null or NUL-terminated; outputs must be writable.
 */
enum PpStatus pp_simulate_speedup(const char *config_json,
                                  size_t rows,
                                  size_t cols,
                                  size_t batch,
                                  size_t p,
                                  double *out_speedup,
                                  double *out_energy_ratio);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PARTPRUNE_H */
