#ifndef MAXNORM_H
#define MAXNORM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Loss used by the radius bound.
 */
typedef enum MaxnormLoss {
  MAXNORM_LOSS_SQUARE = 0,
  MAXNORM_LOSS_CROSS_ENTROPY = 1,
} MaxnormLoss;

/**
 * Status codes. Values 2 to 7 match the command-line exit codes.
 */
typedef enum MaxnormStatus {
  MAXNORM_STATUS_OK = 0,
  MAXNORM_STATUS_NULL_POINTER = 1,
  MAXNORM_STATUS_INVALID_ARGUMENT = 2,
  MAXNORM_STATUS_IO = 3,
  MAXNORM_STATUS_FORMAT = 4,
  MAXNORM_STATUS_NUMERIC = 5,
  MAXNORM_STATUS_DIMENSION = 6,
  MAXNORM_STATUS_EMPTY = 7,
  MAXNORM_STATUS_UTF8 = 8,
  MAXNORM_STATUS_PANIC = 9,
} MaxnormStatus;

/**
 * Opaque model handle.
 */
typedef struct MaxnormModel MaxnormModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the next call.
 */
const char *maxnorm_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *maxnorm_version(void);

/**
 * Loads a checkpoint file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum MaxnormStatus maxnorm_model_load(const char *path, struct MaxnormModel **out);

/**
 * Parses a checkpoint from text.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum MaxnormStatus maxnorm_model_from_text(const char *text, struct MaxnormModel **out);

/**
 * Releases a model. NULL is ignored.
 *
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void maxnorm_model_free(struct MaxnormModel *model);

/**
 * Writes input size, output size and depth (layers of weights).
 *
 * # Safety
 * `model` must be a live handle; the out-pointers must be writable.
 */
enum MaxnormStatus maxnorm_model_shape(const struct MaxnormModel *model,
                                       size_t *input_dim,
                                       size_t *output_dim,
                                       size_t *depth);

/**
 * Largest L2 norm of any weight row.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum MaxnormStatus maxnorm_model_max_row_norm(const struct MaxnormModel *model, double *out);

/**
 * Pre-head outputs for one input.
 *
 * # Safety
 * `x` must hold `x_len` doubles and `out` room for `out_len` doubles.
 */
enum MaxnormStatus maxnorm_model_logits(const struct MaxnormModel *model,
                                        const double *x,
                                        size_t x_len,
                                        double *out,
                                        size_t out_len);

/**
 * Predicted class (lowest index on ties).
 *
 * # Safety
 * `x` must hold `x_len` doubles; `label` must be writable.
 */
enum MaxnormStatus maxnorm_model_predict(const struct MaxnormModel *model,
                                         const double *x,
                                         size_t x_len,
                                         size_t *label);

/**
 * `n^(L/2−1)·c^L`.
 *
 * # Safety
 * `out` must be writable.
 */
enum MaxnormStatus maxnorm_lipschitz_bound(double c, size_t depth, size_t width, double *out);

/**
 * `n^((L−1)/2)·c^L`, which holds for every net in the class.
 *
 * # Safety
 * `out` must be writable.
 */
enum MaxnormStatus maxnorm_lipschitz_bound_sound(double c, size_t depth, size_t width, double *out);

/**
 * Certified L2 radius from logits; 0 when `label` is not the argmax.
 *
 * # Safety
 * `logits` must hold `len` doubles; `out` must be writable.
 */
enum MaxnormStatus maxnorm_certified_radius(const double *logits,
                                            size_t len,
                                            size_t label,
                                            double lip,
                                            double *out);

/**
 * Robust radius lower bound from accuracy `gamma` and loss `epsilon`. `vacuous` is set to 1
 * (and `out` to 0) when the accuracy/loss precondition fails.
 *
 * # Safety
 * `out` and `vacuous` must be writable.
 */
enum MaxnormStatus maxnorm_bound_radius(double c,
                                        size_t depth,
                                        size_t width,
                                        double gamma,
                                        double epsilon,
                                        enum MaxnormLoss loss,
                                        double *out,
                                        int32_t *vacuous);

/**
 * Lower bound on the dihedral angle between adjacent faces.
 *
 * # Safety
 * `out` must be writable.
 */
enum MaxnormStatus maxnorm_angle_lower_bound(double c, size_t depth, size_t width, double *out);

/**
 * Rademacher complexity bound for depth `d`, width `n`, row norm `c`, bias bound `b`.
 *
 * # Safety
 * `out` must be writable.
 */
enum MaxnormStatus maxnorm_rademacher_bound(size_t d,
                                            size_t n,
                                            double c,
                                            double b,
                                            size_t m,
                                            double xmax,
                                            double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MAXNORM_H */
