#ifndef SUBCURV_H
#define SUBCURV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by all functions.
 */
typedef enum SubcurvStatus {
  SUBCURV_STATUS_OK = 0,
  SUBCURV_STATUS_NULL_POINTER = 1,
  SUBCURV_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed scene, expression or argument.
   */
  SUBCURV_STATUS_CONFIG = 3,
  /**
   * A numerical precondition failed (singular frame, degenerate form, …).
   */
  SUBCURV_STATUS_NUMERICAL = 4,
  SUBCURV_STATUS_OUT_OF_RANGE = 5,
  SUBCURV_STATUS_PANIC = 6,
} SubcurvStatus;

/**
 * A parsed expression together with the ordered variable list it is
 * evaluated against.
 */
typedef struct SubcurvExpr SubcurvExpr;

typedef struct SubcurvReport SubcurvReport;

typedef struct SubcurvScene SubcurvScene;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *subcurv_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *subcurv_version(void);

/**
 * Frees a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void subcurv_string_free(char *s);

/**
 * Parses `text` over the variables `names[0..count]`.
 *
 * # Safety
 * `text` and each `names[i]` must be valid NUL-terminated strings; `out`
 * must be writable.
 */
enum SubcurvStatus subcurv_expr_parse(const char *text,
                                      const char *const *names,
                                      size_t count,
                                      struct SubcurvExpr **out);

/**
 * Evaluates at `values[0..count]`, ordered like the parse-time names.
 *
 * # Safety
 * `e` must be a live handle, `values` must hold `count` doubles and `out`
 * must be writable.
 */
enum SubcurvStatus subcurv_expr_eval(const struct SubcurvExpr *e,
                                     const double *values,
                                     size_t count,
                                     double *out);

/**
 * Symbolic derivative with respect to one of the parse-time variables.
 *
 * # Safety
 * `e` must be a live handle, `var` a valid string, `out` writable.
 */
enum SubcurvStatus subcurv_expr_diff(const struct SubcurvExpr *e,
                                     const char *var,
                                     struct SubcurvExpr **out);

/**
 * Renders the expression; free the result with [`subcurv_string_free`].
 *
 * # Safety
 * `e` must be a live handle and `out` writable.
 */
enum SubcurvStatus subcurv_expr_render(const struct SubcurvExpr *e, char **out);

/**
 * # Safety
 * `e` must be NULL or a live handle; it is invalid afterwards.
 */
void subcurv_expr_free(struct SubcurvExpr *e);

/**
 * δ-invariant of a metric `g` and 2-form `omega` on a 4-space, both given
 * as 16 doubles in row-major order. Writes the sign (±1) and `tr(J²)/4`
 * for `J = g⁻¹Ω`; `compatible` receives 1 when Ω lies in the span
 * compatible with a family of null planes.
 *
 * # Safety
 * `g` and `omega` must hold 16 doubles; the out-pointers must be writable.
 */
enum SubcurvStatus subcurv_delta_invariant(const double *g,
                                           const double *omega,
                                           int *sign,
                                           double *value,
                                           int *compatible);

/**
 * Parses a scene from JSON text.
 *
 * # Safety
 * `json` must be a valid string and `out` writable.
 */
enum SubcurvStatus subcurv_scene_from_json(const char *json, struct SubcurvScene **out);

/**
 * Loads one of the scenes shipped with the library, e.g. `"heavenly.scene"`.
 *
 * # Safety
 * `name` must be a valid string and `out` writable.
 */
enum SubcurvStatus subcurv_scene_bundled(const char *name, struct SubcurvScene **out);

/**
 * # Safety
 * `s` must be a live handle.
 */
enum SubcurvStatus subcurv_scene_set_seed(struct SubcurvScene *s, uint64_t seed);

/**
 * # Safety
 * `s` must be a live handle.
 */
enum SubcurvStatus subcurv_scene_set_count(struct SubcurvScene *s, size_t count);

/**
 * # Safety
 * `s` must be NULL or a live handle; it is invalid afterwards.
 */
void subcurv_scene_free(struct SubcurvScene *s);

/**
 * Runs the scene's pipeline. Numerical failures at individual points are
 * part of the report, not an error status.
 *
 * # Safety
 * `s` must be a live handle and `out` writable.
 */
enum SubcurvStatus subcurv_run(const struct SubcurvScene *s, struct SubcurvReport **out);

/**
 * Writes 1 when every check passed, else 0.
 *
 * # Safety
 * `r` must be a live handle and `passed` writable.
 */
enum SubcurvStatus subcurv_report_passed(const struct SubcurvReport *r, int *passed);

/**
 * # Safety
 * `r` must be a live handle and `count` writable.
 */
enum SubcurvStatus subcurv_report_check_count(const struct SubcurvReport *r, size_t *count);

/**
 * Details of check `index`. `name` borrows from the report and lives as long
 * as it does. Any out-pointer may be NULL to skip that field.
 *
 * # Safety
 * `r` must be a live handle; non-NULL out-pointers must be writable.
 */
enum SubcurvStatus subcurv_report_check(const struct SubcurvReport *r,
                                        size_t index,
                                        const char **name,
                                        double *worst,
                                        double *tolerance,
                                        int *passed);

/**
 * The full report as JSON; free with [`subcurv_string_free`].
 *
 * # Safety
 * `r` must be a live handle and `out` writable.
 */
enum SubcurvStatus subcurv_report_json(const struct SubcurvReport *r, char **out);

/**
 * # Safety
 * `r` must be NULL or a live handle; it is invalid afterwards.
 */
void subcurv_report_free(struct SubcurvReport *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUBCURV_H */
