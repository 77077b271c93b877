#ifndef RAWNER_H
#define RAWNER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RawnerStatus {
  RAWNER_STATUS_OK = 0,
  RAWNER_STATUS_NULL_POINTER = 1,
  RAWNER_STATUS_INVALID_UTF8 = 2,
  RAWNER_STATUS_RESOURCE_NOT_FOUND = 3,
  RAWNER_STATUS_MODEL_FORMAT = 4,
  RAWNER_STATUS_IO = 5,
  RAWNER_STATUS_PARSE = 6,
  RAWNER_STATUS_INVALID_INPUT = 7,
  /**
   * A panic was caught at the boundary.
   */
  RAWNER_STATUS_INTERNAL = 8,
} RawnerStatus;

/**
 * Opaque handle to a loaded model.
 */
typedef struct RawnerModel RawnerModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads a model file. On success `*out` owns a new handle.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum RawnerStatus rawner_model_load(const char *path, struct RawnerModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from [`rawner_model_load`] and not be freed twice.
 */
void rawner_model_free(struct RawnerModel *model);

/**
 * Tags `text` and stores a JSON document `{"text": ..., "entities": [...]}`
 * with character offsets in `*out`.
 *
 * # Safety
 * `model` must be a live handle, `text` a nul-terminated string and `out`
 * a valid pointer.
 */
enum RawnerStatus rawner_model_predict_json(const struct RawnerModel *model,
                                            const char *text,
                                            char **out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void rawner_string_free(char *s);

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library on this thread.
 */
const char *rawner_last_error_message(void);

/**
 * Library version, statically allocated.
 */
const char *rawner_version(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* RAWNER_H */
