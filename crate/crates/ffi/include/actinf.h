#ifndef ACTINF_H
#define ACTINF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success.
 */
typedef enum ActinfStatus {
  ACTINF_STATUS_OK = 0,
  ACTINF_STATUS_NULL_POINTER = 1,
  ACTINF_STATUS_INVALID_ARGUMENT = 2,
  ACTINF_STATUS_INDEX_OUT_OF_RANGE = 3,
  ACTINF_STATUS_SHAPE_MISMATCH = 4,
  ACTINF_STATUS_INVALID_MODEL = 5,
  ACTINF_STATUS_PARSE = 6,
  ACTINF_STATUS_IO = 7,
  ACTINF_STATUS_IMPOSSIBLE_OBSERVATION = 8,
  ACTINF_STATUS_NON_CONVERGENCE = 9,
  ACTINF_STATUS_LIMIT_EXCEEDED = 10,
  ACTINF_STATUS_BUFFER_TOO_SMALL = 11,
  ACTINF_STATUS_PANIC = 12,
} ActinfStatus;

/**
 * Opaque generative model handle.
 */
typedef struct ActinfModel ActinfModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds the T-maze. `absorbing` selects the variant with absorbing arms
 * and raw preference weights.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum ActinfStatus actinf_model_tmaze(bool absorbing, struct ActinfModel **out);

/**
 * Parses and validates a model from a NUL-terminated JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum ActinfStatus actinf_model_from_json(const char *json, struct ActinfModel **out);

/**
 * Loads and validates a model file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum ActinfStatus actinf_model_load(const char *path, struct ActinfModel **out);

/**
 * Writes a model file.
 *
 * # Safety
 * `model` must be a live handle and `path` a NUL-terminated string.
 */
enum ActinfStatus actinf_model_save(const struct ActinfModel *model, const char *path);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `model` must come from a constructor here and not be used afterwards.
 */
void actinf_model_free(struct ActinfModel *model);

/**
 * Joint state count, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t actinf_model_num_states(const struct ActinfModel *model);

/**
 * Joint observation count, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t actinf_model_num_observations(const struct ActinfModel *model);

/**
 * # Safety
 * `model` must be null or a live handle.
 */
size_t actinf_model_num_actions(const struct ActinfModel *model);

/**
 * # Safety
 * `model` must be null or a live handle.
 */
size_t actinf_model_horizon(const struct ActinfModel *model);

/**
 * Number of policies available at time `t` (1-based), or 0 when `t` is out
 * of range or the count exceeds the enumeration limit.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t actinf_num_policies(const struct ActinfModel *model, size_t t);

/**
 * Writes `p(s_1)` over joint states into `out`.
 *
 * # Safety
 * `model` must be a live handle and `out` point to `out_len` doubles.
 */
enum ActinfStatus actinf_initial_belief(const struct ActinfModel *model,
                                        double *out,
                                        size_t out_len);

/**
 * One filtering step. A negative `action` means no transition (first
 * observation of an episode).
 *
 * # Safety
 * `prior` must point to `prior_len` doubles and `out` to `out_len` doubles.
 */
enum ActinfStatus actinf_filter_step(const struct ActinfModel *model,
                                     const double *prior,
                                     size_t prior_len,
                                     int64_t action,
                                     size_t observation,
                                     double *out,
                                     size_t out_len);

/**
 * Policy posterior at the current time given the belief and the history so
 * far (`num_observations` observations and one fewer actions). Policies
 * are in lexicographic order of their action sequences; their count goes to
 * `out_count`.
 *
 * # Safety
 * Array pointers must be valid for their stated lengths; `out_count` must
 * be writable.
 */
enum ActinfStatus actinf_policy_posterior(const struct ActinfModel *model,
                                          const double *belief,
                                          size_t belief_len,
                                          const size_t *observations,
                                          size_t num_observations,
                                          const size_t *actions,
                                          size_t num_actions,
                                          double *out,
                                          size_t out_len,
                                          size_t *out_count);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `len > 0`). Returns the full message length
 * excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t actinf_last_error_message(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACTINF_H */
