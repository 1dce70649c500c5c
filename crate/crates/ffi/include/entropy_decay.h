#ifndef ENTROPY_DECAY_H
#define ENTROPY_DECAY_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. The first four coincide with the command-line exit codes.
typedef enum EdStatus {
  ED_STATUS_OK = 0,
  // The run finished but a verdict failed, or a precondition (such as the
  // nonlinearity condition) does not hold.
  ED_STATUS_VERDICT_FAILED = 2,
  ED_STATUS_CONFIG_ERROR = 3,
  ED_STATUS_NUMERICAL_ERROR = 4,
  ED_STATUS_INVALID_ARGUMENT = 5,
  ED_STATUS_IO_ERROR = 6,
  ED_STATUS_PANIC = 7,
} EdStatus;

// A parsed and validated scenario.
typedef struct EdConfig EdConfig;

// The result of one run.
typedef struct EdReport EdReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// The library version as a static string; never freed.
const char *ed_version(void);

// The message of the last failed call on this thread, or null. The pointer
// stays valid until the next library call on the same thread.
const char *ed_last_error_message(void);

// Releases a string returned by this library.
//
// # Safety
// `s` is null or was returned by this library and not yet freed.
void ed_string_free(char *s);

// Parses and validates a JSON scenario.
//
// # Safety
// `json` is a NUL-terminated string; `out` is a valid pointer.
enum EdStatus ed_config_from_json(const char *json, struct EdConfig **out);

// Replaces the seed (also used for lattice draws).
//
// # Safety
// `config` is a live handle.
enum EdStatus ed_config_set_seed(struct EdConfig *config, uint64_t seed);

// Divides the cell width by `factor`.
//
// # Safety
// `config` is a live handle.
enum EdStatus ed_config_refine(struct EdConfig *config, double factor);

// # Safety
// `config` is null or a handle not yet freed.
void ed_config_free(struct EdConfig *config);

// Runs the command named `verb` (`decay`, `periodic-decay`,
// `counterexample`, `pipeline`, `check-gn`, `lattice-cert`). When the run
// completes `*out` receives a report even if a verdict failed, in which case
// the status is `VerdictFailed`.
//
// # Safety
// `config` is a live handle, `verb` a NUL-terminated string and `out` a
// valid pointer.
enum EdStatus ed_run(const struct EdConfig *config, const char *verb, struct EdReport **out);

// # Safety
// `report` is null or a handle not yet freed.
void ed_report_free(struct EdReport *report);

// 1 when every verdict passed, 0 otherwise or for a null handle.
//
// # Safety
// `report` is null or a live handle.
int32_t ed_report_passed(const struct EdReport *report);

// Number of verdicts, 0 for a null handle.
//
// # Safety
// `report` is null or a live handle.
size_t ed_report_verdict_count(const struct EdReport *report);

// Name and outcome of verdict `index`. The name is a new string for
// [`ed_string_free`].
//
// # Safety
// `report` is a live handle; `name` and `passed` are valid pointers.
enum EdStatus ed_report_verdict(const struct EdReport *report,
                                size_t index,
                                char **name,
                                int32_t *passed);

// Looks up a named scalar of the report summary.
//
// # Safety
// `report` is a live handle, `key` a NUL-terminated string, `value` a valid
// pointer.
enum EdStatus ed_report_summary_value(const struct EdReport *report,
                                      const char *key,
                                      double *value);

// The report as JSON, a new string for [`ed_string_free`].
//
// # Safety
// `report` is a live handle; `json` a valid pointer.
enum EdStatus ed_report_to_json(const struct EdReport *report, char **json);

// Writes `report.json`, `series.csv` and the plots and state files under
// `out_dir`.
//
// # Safety
// `report` is a live handle; `out_dir` a NUL-terminated string.
enum EdStatus ed_report_write(const struct EdReport *report, const char *out_dir);

// One-call form of the command line: parses `config_json`, applies `seed`
// when it is nonnegative, runs `verb`, writes the outputs when `out_dir` is
// not null, and stores the report JSON in `*report_json` (null when `report_json`
// is null or the run did not complete).
//
// # Safety
// `verb` and `config_json` are NUL-terminated strings; `out_dir` is null or
// NUL-terminated; `report_json` is null or a valid pointer.
enum EdStatus ed_run_command(const char *verb,
                             const char *config_json,
                             const char *out_dir,
                             int64_t seed,
                             char **report_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ENTROPY_DECAY_H */
