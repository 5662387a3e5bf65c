#ifndef CLUSTERFIRST_H
#define CLUSTERFIRST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CfStatus {
  CF_STATUS_OK = 0,
  CF_STATUS_NULL_POINTER = 1,
  CF_STATUS_INVALID_UTF8 = 2,
  CF_STATUS_PARSE = 3,
  CF_STATUS_INVALID_CONFIG = 4,
  CF_STATUS_INFEASIBLE_BUDGET = 5,
  CF_STATUS_UNSUPPORTED = 6,
  CF_STATUS_ZONE_TOO_LARGE = 7,
  CF_STATUS_LATENCY_TABLE = 8,
  CF_STATUS_IO = 9,
  CF_STATUS_PANIC = 10,
} CfStatus;

/**
 * A GPU latency table.
 */
typedef struct CfLatencyTable CfLatencyTable;

/**
 * A configured pipeline.
 */
typedef struct CfPipeline CfPipeline;

/**
 * Closed-open pixel box.
 */
typedef struct CfBox {
  int32_t x_min;
  int32_t y_min;
  int32_t x_max;
  int32_t y_max;
} CfBox;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after success.
 * The pointer stays valid until the next call on this thread.
 */
const char *cf_last_error(void);

/**
 * Frees a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` is NULL or came from this library and was not freed before.
 */
void cf_string_free(char *s);

/**
 * Builds a pipeline from a JSON config; NULL uses the defaults.
 *
 * # Safety
 * `config_json` is NULL or NUL-terminated; `out` is a valid pointer.
 */
enum CfStatus cf_pipeline_new(const char *config_json, struct CfPipeline **out);

/**
 * # Safety
 * `p` is NULL or a live handle from [`cf_pipeline_new`].
 */
void cf_pipeline_free(struct CfPipeline *p);

/**
 * Runs one frame and returns its JSON report in `*report_json`.
 *
 * # Safety
 * `p` is a live pipeline handle; the strings are NUL-terminated;
 * `report_json` is a valid pointer.
 */
enum CfStatus cf_pipeline_run_scene(const struct CfPipeline *p,
                                    const char *frame_id,
                                    const char *scene_json,
                                    char **report_json);

/**
 * The profiled table bundled with the library.
 *
 * # Safety
 * `out` is a valid pointer.
 */
enum CfStatus cf_latency_table_default(struct CfLatencyTable **out);

/**
 * Parses a latency table from CSV text, rejecting non-monotone tables.
 *
 * # Safety
 * `csv` is NUL-terminated; `out` is a valid pointer.
 */
enum CfStatus cf_latency_table_from_csv(const char *csv, struct CfLatencyTable **out);

/**
 * # Safety
 * `t` is NULL or a live table handle.
 */
void cf_latency_table_free(struct CfLatencyTable *t);

/**
 * Latency in ms for `batch` inputs of side `size`; sizes and batches
 * round up to listed values. `CF_STATUS_UNSUPPORTED` for blank cells.
 *
 * # Safety
 * `t` is a live table handle; `out_ms` is a valid pointer.
 */
enum CfStatus cf_latency_table_lookup(const struct CfLatencyTable *t,
                                      uint32_t size,
                                      uint32_t batch,
                                      double *out_ms);

double cf_iou(struct CfBox a, struct CfBox b);

/**
 * Downsizing factor at `depth_m` with the default parameters.
 */
double cf_downsize_factor(double depth_m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CLUSTERFIRST_H */
