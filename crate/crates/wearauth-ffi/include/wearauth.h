#ifndef WEARAUTH_H
#define WEARAUTH_H

/* Generated by cbindgen; edit src/lib.rs instead. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.
typedef enum WaStatus {
  WA_OK = 0,
  WA_ERR_NULL_ARGUMENT = 1,
  WA_ERR_UTF8 = 2,
  WA_ERR_IO = 3,
  WA_ERR_PARSE = 4,
  WA_ERR_SCHEMA_VERSION = 5,
  WA_ERR_DIMENSION = 6,
  WA_ERR_NOT_CALIBRATED = 7,
  WA_ERR_NO_FEATURE_SET = 8,
  WA_ERR_BAD_ARGUMENT = 9,
  WA_ERR_INTERNAL = 10,
} WaStatus;

// Opaque model handle.
typedef struct WaModel WaModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Crate version as a static NUL-terminated string.
const char *wa_version(void);

// Detail message of the most recent error on this thread. The pointer is
// valid until the next failing call on the same thread.
const char *wa_last_error_message(void);

// Load a model from a JSON file written by the pipeline's `train` stage.
//
// # Safety
// `path` must be a valid NUL-terminated string; `out` must be a valid
// pointer to a `WaModel*` slot.
enum WaStatus wa_model_load_file(const char *path, struct WaModel **out);

// Load a model from an in-memory JSON document.
//
// # Safety
// `json` must be a valid NUL-terminated string; `out` must be a valid
// pointer to a `WaModel*` slot.
enum WaStatus wa_model_load_json(const char *json, struct WaModel **out);

// Release a model handle. Null is a no-op.
//
// # Safety
// `model` must be null or a handle returned by `wa_model_load_*` that has
// not been freed yet.
void wa_model_free(struct WaModel *model);

// Number of features the model scores; 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t wa_model_feature_count(const struct WaModel *model);

// 1 when the model carries a Platt calibration, else 0.
//
// # Safety
// `model` must be null or a live handle.
int wa_model_is_calibrated(const struct WaModel *model);

// Subject id as a newly allocated string (free with `wa_string_free`).
// Returns null for a null handle.
//
// # Safety
// `model` must be null or a live handle.
char *wa_model_subject_id(const struct WaModel *model);

// Free a string returned by this library. Null is a no-op.
//
// # Safety
// `s` must be null or a pointer returned by `wa_model_subject_id`.
void wa_string_free(char *s);

// Signed decision value of a feature vector; positive means genuine.
//
// # Safety
// `model` must be a live handle, `features` must point to `len` readable
// doubles, and `out` must be a valid pointer.
enum WaStatus wa_model_decision_value(const struct WaModel *model,
                                      const double *features,
                                      size_t len,
                                      double *out);

// Posterior probability of the genuine class (needs a calibrated model).
//
// # Safety
// Same contract as [`wa_model_decision_value`].
enum WaStatus wa_model_probability(const struct WaModel *model,
                                   const double *features,
                                   size_t len,
                                   double *out);

// Score one raw five-minute window. Each channel buffer holds the five
// per-minute samples; `activity_level` is 0 sedentary, 1 light, 2 fair,
// 3 high. The model must embed its feature set (pipeline-trained models
// do). When `probability` is nonzero the output is the Platt probability,
// otherwise the signed decision value.
//
// # Safety
// `model` must be a live handle; the four channel pointers must each point
// to five readable doubles; `out` must be a valid pointer.
enum WaStatus wa_model_score_window(const struct WaModel *model,
                                    const double *heart_rate,
                                    const double *calories,
                                    const double *met,
                                    const double *steps,
                                    int activity_level,
                                    int probability,
                                    double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WEARAUTH_H */
