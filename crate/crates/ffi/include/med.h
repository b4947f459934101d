#ifndef MED_H
#define MED_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MedStatus {
  MED_STATUS_OK = 0,
  MED_STATUS_NULL_POINTER = 1,
  MED_STATUS_INVALID_UTF8 = 2,
  MED_STATUS_PARSE_ERROR = 3,
  MED_STATUS_TYPE_ERROR = 4,
  MED_STATUS_SCOPE_ERROR = 5,
  MED_STATUS_EVAL_ERROR = 6,
  MED_STATUS_LIMIT_EXCEEDED = 7,
  MED_STATUS_INTERNAL = 8,
} MedStatus;

/*
 A type-checked model instantiated at a scope.
 */
typedef struct MedModel MedModel;

/*
 Result of [`med_check`].
 */
typedef struct MedReport MedReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Parses and type checks `source` and instantiates it at `scope`
 (`"NODE=2,RANGE=1"`, or null when the model has no carriers).

 # Safety
 `source` and `scope` must be null or NUL-terminated strings; `out` must be
 a valid pointer.
 */
enum MedStatus med_model_parse(const char *source, const char *scope, struct MedModel **out);

/*
 Like [`med_model_parse`], reading the source from `path`.

 # Safety
 As for [`med_model_parse`].
 */
enum MedStatus med_model_load_file(const char *path, const char *scope, struct MedModel **out);

/*
 # Safety
 `model` must be null or a handle from this library, not yet freed.
 */
void med_model_free(struct MedModel *model);

/*
 Explores the model and runs the invariant, deadlock and coverage checks.
 `max_states` 0 keeps the default limit.

 # Safety
 `model` must be a live handle and `out` a valid pointer.
 */
enum MedStatus med_check(const struct MedModel *model,
                         uintptr_t max_states,
                         uintptr_t workers,
                         struct MedReport **out);

/*
 # Safety
 `report` must be null or a live handle.
 */
void med_report_free(struct MedReport *report);

/*
 Reachable states; 0 for a null handle.

 # Safety
 `report` must be null or a live handle.
 */
uint64_t med_report_states(const struct MedReport *report);

/*
 # Safety
 `report` must be null or a live handle.
 */
uint64_t med_report_transitions(const struct MedReport *report);

/*
 # Safety
 `report` must be null or a live handle.
 */
uint64_t med_report_deadlocked(const struct MedReport *report);

/*
 # Safety
 `report` must be null or a live handle.
 */
uint64_t med_report_violations(const struct MedReport *report);

/*
 The command-line exit code of the verdict: 0 pass, 1 counterexample,
 3 limit reached; -1 for a null handle.

 # Safety
 `report` must be null or a live handle.
 */
int32_t med_report_verdict(const struct MedReport *report);

/*
 The JSON report, as printed by `med check --json`.

 # Safety
 `report` must be a live handle and `out` a valid pointer.
 */
enum MedStatus med_report_json(const struct MedReport *report, char **out);

/*
 Checks an LTL formula. `reject_deadlocks` selects the reject reading of
 deadlocks instead of stuttering. `verdict` receives 0 (holds),
 1 (violated) or 3 (inconclusive); `trace_json`, if not null, receives
 the counterexample trace or null.

 # Safety
 `model` must be a live handle, `formula` a NUL-terminated string and
 `verdict` a valid pointer; `trace_json` may be null.
 */
enum MedStatus med_ltl_check(const struct MedModel *model,
                             const char *formula,
                             bool reject_deadlocks,
                             uintptr_t max_states,
                             int32_t *verdict,
                             char **trace_json);

/*
 Canonical layout of a model source.

 # Safety
 `source` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MedStatus med_format(const char *source, char **out);

/*
 # Safety
 `s` must be null or a string returned by this library, not yet freed.
 */
void med_string_free(char *s);

/*
 Message of the last failed call on this thread; empty after a success.
 The pointer stays valid until the next call on the same thread.
 */
const char *med_last_error_message(void);

/*
 Library version as a static string.
 */
const char *med_version(void);

/*
 Reports that exceed `max_states` come back as [`MedStatus::Ok`] with
 verdict 3; this helper maps a verdict to a status for callers that
 prefer failing loudly.
 */
enum MedStatus med_verdict_status(int32_t verdict);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MED_H */
