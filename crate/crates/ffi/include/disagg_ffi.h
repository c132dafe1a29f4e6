#ifndef DISAGG_FFI_H
#define DISAGG_FFI_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum DisaggStatus {
  DISAGG_STATUS_OK = 0,
  DISAGG_STATUS_NULL_POINTER = 1,
  DISAGG_STATUS_INVALID_UTF8 = 2,
  DISAGG_STATUS_PARSE = 3,
  DISAGG_STATUS_GAP = 4,
  DISAGG_STATUS_ARGUMENT = 5,
  DISAGG_STATUS_EMPTY_WINDOW = 6,
  DISAGG_STATUS_COVERAGE = 7,
  DISAGG_STATUS_DEGENERATE_MODEL = 8,
  DISAGG_STATUS_CAPACITY = 9,
  DISAGG_STATUS_ALIGNMENT = 10,
  DISAGG_STATUS_UNDEFINED = 11,
  DISAGG_STATUS_PRECONDITION = 12,
  DISAGG_STATUS_VALIDATION = 13,
  DISAGG_STATUS_CONFIG = 14,
  DISAGG_STATUS_TIMEZONE = 15,
  DISAGG_STATUS_IO = 16,
  DISAGG_STATUS_JSON = 17,
  DISAGG_STATUS_OUT_OF_RANGE = 18,
  DISAGG_STATUS_PANIC = 99,
} DisaggStatus;

/**
 * Detected step changes.
 */
typedef struct DisaggEvents DisaggEvents;

/**
 * Output of the unsupervised edge-pair disaggregator.
 */
typedef struct DisaggHart DisaggHart;

/**
 * Occupancy flags on a window grid.
 */
typedef struct DisaggOccupancy DisaggOccupancy;

/**
 * Matched ON/OFF pairs.
 */
typedef struct DisaggPairs DisaggPairs;

/**
 * A power stream on a regular grid.
 */
typedef struct DisaggSeries DisaggSeries;

/**
 * Per-window confusion counts and derived rates.
 */
typedef struct DisaggOccupancyMetrics {
  uint64_t tp;
  uint64_t tn;
  uint64_t fp;
  uint64_t fn_;
  double accuracy_pct;
  uint64_t energy_proxy;
  uint64_t miss_time;
} DisaggOccupancyMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into this library on the same thread.
 */
const char *disagg_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *disagg_version(void);

/**
 * Builds a series from `len` samples starting at unix time `start`.
 *
 * # Safety
 * `timezone` must be a NUL-terminated string and `values` must point to
 * `len` readable doubles (it may be null when `len` is 0).
 */
enum DisaggStatus disagg_series_new(int64_t start,
                                    const char *timezone,
                                    uint32_t period_s,
                                    const double *values,
                                    size_t len,
                                    struct DisaggSeries **out);

/**
 * Loads a `timestamp,power_w` CSV.
 *
 * # Safety
 * `path` and `timezone` must be NUL-terminated strings.
 */
enum DisaggStatus disagg_series_load_csv(const char *path,
                                         const char *timezone,
                                         struct DisaggSeries **out);

/**
 * Number of samples; 0 for a null handle.
 *
 * # Safety
 * `series` must be null or a live handle.
 */
size_t disagg_series_len(const struct DisaggSeries *series);

/**
 * Copies up to `capacity` samples into `buf` and stores the full length in
 * `len_out`.
 *
 * # Safety
 * `buf` must have room for `capacity` doubles; `series` must be a live
 * handle.
 */
enum DisaggStatus disagg_series_copy_values(const struct DisaggSeries *series,
                                            double *buf,
                                            size_t capacity,
                                            size_t *len_out);

/**
 * # Safety
 * `series` must be null or a handle not freed before.
 */
void disagg_series_free(struct DisaggSeries *series);

/**
 * Steady-state edge detection.
 *
 * # Safety
 * `series` must be a live handle.
 */
enum DisaggStatus disagg_detect_events(const struct DisaggSeries *series,
                                       double steady_tol_w,
                                       double min_event_w,
                                       struct DisaggEvents **out);

/**
 * # Safety
 * `events` must be null or a live handle.
 */
size_t disagg_events_len(const struct DisaggEvents *events);

/**
 * Reads event `index`.
 *
 * # Safety
 * `events` must be a live handle; out-pointers must be writable.
 */
enum DisaggStatus disagg_events_get(const struct DisaggEvents *events,
                                    size_t index,
                                    int64_t *time_out,
                                    double *delta_w_out);

/**
 * # Safety
 * `events` must be null or a handle not freed before.
 */
void disagg_events_free(struct DisaggEvents *events);

/**
 * Greedy earliest-first ON/OFF pairing.
 *
 * # Safety
 * `events` must be a live handle.
 */
enum DisaggStatus disagg_pair_events(const struct DisaggEvents *events,
                                     double match_tol_frac,
                                     int64_t max_duration_s,
                                     struct DisaggPairs **out);

/**
 * # Safety
 * `pairs` must be null or a live handle.
 */
size_t disagg_pairs_len(const struct DisaggPairs *pairs);

/**
 * Reads pair `index`.
 *
 * # Safety
 * `pairs` must be a live handle; out-pointers must be writable.
 */
enum DisaggStatus disagg_pairs_get(const struct DisaggPairs *pairs,
                                   size_t index,
                                   int64_t *on_time_out,
                                   int64_t *off_time_out,
                                   double *magnitude_w_out);

/**
 * # Safety
 * `pairs` must be null or a handle not freed before.
 */
void disagg_pairs_free(struct DisaggPairs *pairs);

/**
 * Edge-pair disaggregation with default settings.
 *
 * # Safety
 * `series` must be a live handle.
 */
enum DisaggStatus disagg_hart(const struct DisaggSeries *series, struct DisaggHart **out);

/**
 * Copy of the HVAC trace as a new series handle.
 *
 * # Safety
 * `hart` must be a live handle.
 */
enum DisaggStatus disagg_hart_hvac(const struct DisaggHart *hart, struct DisaggSeries **out);

/**
 * 1 when no pair cluster was large enough to be HVAC, 0 otherwise, -1 for
 * a null handle.
 *
 * # Safety
 * `hart` must be null or a live handle.
 */
int32_t disagg_hart_hvac_missing(const struct DisaggHart *hart);

/**
 * # Safety
 * `hart` must be null or a handle not freed before.
 */
void disagg_hart_free(struct DisaggHart *hart);

/**
 * Event-pair occupancy of one aggregate stream. `config_json` is an
 * optional run configuration; null selects the defaults.
 *
 * # Safety
 * `series` must be a live handle; `config_json` null or NUL-terminated.
 */
enum DisaggStatus disagg_occupancy_predict(const struct DisaggSeries *series,
                                           const char *config_json,
                                           struct DisaggOccupancy **out);

/**
 * Builds occupancy flags from `len` bytes (non-zero = occupied).
 *
 * # Safety
 * `flags` must point to `len` readable bytes.
 */
enum DisaggStatus disagg_occupancy_new(int64_t window_start,
                                       uint32_t window_s,
                                       const uint8_t *flags,
                                       size_t len,
                                       struct DisaggOccupancy **out);

/**
 * # Safety
 * `occ` must be null or a live handle.
 */
size_t disagg_occupancy_len(const struct DisaggOccupancy *occ);

/**
 * Occupied flag of window `index` (0 or 1).
 *
 * # Safety
 * `occ` must be a live handle; `flag_out` writable.
 */
enum DisaggStatus disagg_occupancy_get(const struct DisaggOccupancy *occ,
                                       size_t index,
                                       uint8_t *flag_out);

/**
 * Scores `pred` against `truth` over the default evaluation hours in
 * `timezone`.
 *
 * # Safety
 * Handles must be live; `timezone` NUL-terminated; `out` writable.
 */
enum DisaggStatus disagg_occupancy_evaluate(const struct DisaggOccupancy *pred,
                                            const struct DisaggOccupancy *truth,
                                            const char *timezone,
                                            struct DisaggOccupancyMetrics *out);

/**
 * # Safety
 * `occ` must be null or a handle not freed before.
 */
void disagg_occupancy_free(struct DisaggOccupancy *occ);

/**
 * Runs the occupancy experiment on a manifest and returns the result
 * document as JSON, freed with [`disagg_string_free`].
 *
 * `algorithms` is comma-separated (e.g. `"ours,chen"`); `protocol` is
 * `"split-half"` or `"loho"`; `config_json` may be null.
 *
 * # Safety
 * String arguments must be NUL-terminated (except a null `config_json`).
 */
enum DisaggStatus disagg_occupancy_experiment_json(const char *manifest_path,
                                                   const char *algorithms,
                                                   const char *protocol,
                                                   const char *config_json,
                                                   char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not freed before.
 */
void disagg_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DISAGG_FFI_H */
