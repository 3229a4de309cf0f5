#ifndef PCONVEX_H
#define PCONVEX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum PcxStatus {
  PCX_STATUS_OK = 0,
  PCX_STATUS_NULL_POINTER = 1,
  /**
   * `p` outside (0,1] or another rejected parameter.
   */
  PCX_STATUS_INVALID_ARGUMENT = 2,
  PCX_STATUS_DIMENSION_MISMATCH = 3,
  /**
   * Numerical failure, e.g. an unbounded body.
   */
  PCX_STATUS_NUMERICAL = 4,
  PCX_STATUS_PRECONDITION = 5,
  /**
   * Scenario file could not be read.
   */
  PCX_STATUS_IO = 6,
  /**
   * Scenario file is malformed.
   */
  PCX_STATUS_INVALID_CONFIG = 7,
  PCX_STATUS_PANIC = 8,
} PcxStatus;

/**
 * Opaque body handle.
 */
typedef struct PcxBody PcxBody;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next call into the library from the same thread.
 */
const char *pcx_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pcx_version(void);

/**
 * Weighted p-ball `{x : Σ w_i |x_i|^p ≤ 1}`.
 *
 * # Safety
 * `weights` must point to `dim` doubles and `out` must be writable.
 */
enum PcxStatus pcx_body_pball(const double *weights, size_t dim, double p, struct PcxBody **out);

/**
 * Euclidean disk of `radius` centered at 0.
 *
 * # Safety
 * `out` must be writable.
 */
enum PcxStatus pcx_body_euclidean_disk(size_t dim, double radius, double p, struct PcxBody **out);

/**
 * Axis-aligned box `{x : |x_i| ≤ h_i}`.
 *
 * # Safety
 * `half_widths` must point to `dim` doubles and `out` must be writable.
 */
enum PcxStatus pcx_body_box(const double *half_widths, size_t dim, double p, struct PcxBody **out);

/**
 * Releases a body. NULL is ignored.
 *
 * # Safety
 * `body` must come from a `pcx_body_*` constructor and not be used afterwards.
 */
void pcx_body_free(struct PcxBody *body);

/**
 * Dimension of `body`, or 0 for NULL.
 *
 * # Safety
 * `body` must be NULL or a live handle.
 */
size_t pcx_body_dim(const struct PcxBody *body);

/**
 * Gauge of `x`, accurate to `tol`.
 *
 * # Safety
 * `x` must point to `dim` doubles; `out` must be writable.
 */
enum PcxStatus pcx_gauge(const struct PcxBody *body,
                         const double *x,
                         size_t dim,
                         double tol,
                         double *out);

/**
 * Membership test; writes 1 or 0.
 *
 * # Safety
 * `x` must point to `dim` doubles; `out` must be writable.
 */
enum PcxStatus pcx_contains(const struct PcxBody *body, const double *x, size_t dim, int32_t *out);

/**
 * Radial retraction of `x` onto `body`, written to `out[0..dim]`.
 *
 * # Safety
 * `x` and `out` must each point to `dim` doubles. They may alias.
 */
enum PcxStatus pcx_retract(const struct PcxBody *body,
                           const double *x,
                           size_t dim,
                           double tol,
                           double *out);

/**
 * Splits `u ∈ [0,1]` into `(u^(1/p), (1-u)^(1/p))`.
 *
 * # Safety
 * `s` and `t` must be writable.
 */
enum PcxStatus pcx_admissible_pair(double p, double u, double *s, double *t);

/**
 * Runs the scenario at `config_path` and writes its report to `out_dir`.
 * `seed` overrides the config seed when `use_seed` is non-zero. Failed
 * tasks are recorded in the report and do not change the status.
 *
 * # Safety
 * Both paths must be NUL-terminated UTF-8 strings.
 */
enum PcxStatus pcx_run_scenario(const char *config_path,
                                const char *out_dir,
                                uint64_t seed,
                                int32_t use_seed,
                                int32_t parallel);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PCONVEX_H */
