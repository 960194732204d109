#ifndef FBMC_MIMO_H
#define FBMC_MIMO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum FbmcStatus {
  FBMC_STATUS_OK = 0,
  // A required pointer argument was NULL.
  FBMC_STATUS_NULL_POINTER = 1,
  // An argument is out of range or not valid UTF-8.
  FBMC_STATUS_INVALID_ARGUMENT = 2,
  // The scenario is malformed or violates a constraint.
  FBMC_STATUS_CONFIG = 3,
  // The simulation failed (singular channel, divergence, non-finite values).
  FBMC_STATUS_RUNTIME = 4,
  // A file could not be read or written.
  FBMC_STATUS_IO = 5,
  // The output buffer is shorter than the value reported in `len_out`.
  FBMC_STATUS_BUFFER_TOO_SMALL = 6,
  // The library panicked; the handle arguments should be discarded.
  FBMC_STATUS_PANIC = 7,
} FbmcStatus;

// Experiment kind of a scenario or report.
typedef enum FbmcReportKind {
  FBMC_REPORT_KIND_SELF_EQUALIZATION = 0,
  FBMC_REPORT_KIND_BLIND_TRACKING = 1,
} FbmcReportKind;

// Curve selector for [`fbmc_report_curve`].
typedef enum FbmcCurve {
  // Per-subcarrier ensemble mean SINR of the matched filter.
  FBMC_CURVE_MF_MEAN = 0,
  FBMC_CURVE_MF_MEDIAN = 1,
  FBMC_CURVE_MMSE_MEAN = 2,
  FBMC_CURVE_MMSE_MEDIAN = 3,
  // Median blind-tracking SINR per iteration.
  FBMC_CURVE_TRACKING_MEDIAN = 4,
} FbmcCurve;

// Opaque report handle.
typedef struct FbmcReport FbmcReport;

// Opaque scenario handle.
typedef struct FbmcScenario FbmcScenario;

// Reference SINRs of a blind-tracking report, dB.
typedef struct FbmcBaselines {
  double mf_noisy_db;
  double mf_clean_db;
  double mmse_clean_db;
} FbmcBaselines;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library name and version, NUL-terminated, valid for the process lifetime.
const char *fbmc_version(void);

// Message of the last failed call on this thread, or NULL if none.
// The pointer stays valid until the next failing call on the same thread.
const char *fbmc_last_error(void);

// Reads and validates a scenario file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum FbmcStatus fbmc_scenario_load(const char *path, struct FbmcScenario **out);

// Parses scenario text in the scenario-file format.
//
// # Safety
// `source` must be a NUL-terminated string; `out` must be writable.
enum FbmcStatus fbmc_scenario_parse(const char *source, struct FbmcScenario **out);

// Built-in reference scenario of the given kind.
//
// # Safety
// `kind` must be one of the `FbmcReportKind` enumerators; `out` must be writable.
enum FbmcStatus fbmc_scenario_default(enum FbmcReportKind kind, struct FbmcScenario **out);

// Replaces the scenario's base seed.
//
// # Safety
// `scenario` must be a live handle.
enum FbmcStatus fbmc_scenario_set_seed(struct FbmcScenario *scenario, uint64_t seed);

// Replaces the number of Monte Carlo trials (at least 1).
//
// # Safety
// `scenario` must be a live handle.
enum FbmcStatus fbmc_scenario_set_trials(struct FbmcScenario *scenario, size_t trials);

// Canonical scenario text. `len_out` receives its size in bytes including
// the terminating NUL; pass `out = NULL` to query it.
//
// # Safety
// `scenario` must be a live handle; `out` must hold `capacity` bytes or be NULL.
enum FbmcStatus fbmc_scenario_to_string(const struct FbmcScenario *scenario,
                                        char *out,
                                        size_t capacity,
                                        size_t *len_out);

// Releases a scenario. NULL is ignored.
//
// # Safety
// `scenario` must be NULL or a handle not yet freed.
void fbmc_scenario_free(struct FbmcScenario *scenario);

// Runs the experiment described by `scenario`.
//
// # Safety
// `scenario` must be a live handle; `out` must be writable.
enum FbmcStatus fbmc_run(const struct FbmcScenario *scenario, struct FbmcReport **out);

// # Safety
// `report` must be a live handle; `out` must be writable.
enum FbmcStatus fbmc_report_kind(const struct FbmcReport *report, enum FbmcReportKind *out);

// Copies one curve. Self-equalization reports have the four MF/MMSE
// curves (one value per subcarrier); tracking reports have
// `FBMC_CURVE_TRACKING_MEDIAN` (one value per iteration).
//
// # Safety
// `report` must be a live handle; `curve` must be one of the `FbmcCurve`
// enumerators; `out` must hold `capacity` doubles or be NULL; `len_out` must
// be writable or NULL.
enum FbmcStatus fbmc_report_curve(const struct FbmcReport *report,
                                  enum FbmcCurve curve,
                                  double *out,
                                  size_t capacity,
                                  size_t *len_out);

// Target output SINR `snr_in + 10 log10 M` of a self-equalization report.
//
// # Safety
// `report` must be a live handle; `out` must be writable.
enum FbmcStatus fbmc_report_target_sinr_db(const struct FbmcReport *report, double *out);

// Median baselines of a blind-tracking report.
//
// # Safety
// `report` must be a live handle; `out` must be writable.
enum FbmcStatus fbmc_report_baselines(const struct FbmcReport *report, struct FbmcBaselines *out);

// Writes the report bundle (summary, tables, optional SVG plots) into `dir`.
//
// # Safety
// `report` must be a live handle; `dir` must be a NUL-terminated string.
enum FbmcStatus fbmc_report_write(const struct FbmcReport *report, const char *dir, bool plot);

// Releases a report. NULL is ignored.
//
// # Safety
// `report` must be NULL or a handle not yet freed.
void fbmc_report_free(struct FbmcReport *report);

// Designed prototype filter taps (`overlap_factor * num_subcarriers + 1`
// values, unit energy).
//
// # Safety
// `out` must hold `capacity` doubles or be NULL; `len_out` must be writable or NULL.
enum FbmcStatus fbmc_design_prototype(size_t num_subcarriers,
                                      size_t overlap_factor,
                                      double *out,
                                      size_t capacity,
                                      size_t *len_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FBMC_MIMO_H */
