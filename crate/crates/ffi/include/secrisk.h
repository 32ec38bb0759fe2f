#ifndef SECRISK_H
#define SECRISK_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SecriskStatus {
  SECRISK_STATUS_OK = 0,
  SECRISK_STATUS_NULL_POINTER = 1,
  SECRISK_STATUS_INVALID_UTF8 = 2,
  SECRISK_STATUS_INVALID_ARGUMENT = 3,
  SECRISK_STATUS_INVALID_CONFIG = 4,
  SECRISK_STATUS_IO = 5,
  SECRISK_STATUS_INVALID_DATA = 6,
  SECRISK_STATUS_PANIC = 7,
} SecriskStatus;

// Scan configuration; create with [`secrisk_scanner_new`].
typedef struct SecriskScanner SecriskScanner;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Create a scanner for the repository at `root`.
//
// # Safety
// `root` must be a NUL-terminated string; `out` must be writable.
enum SecriskStatus secrisk_scanner_new(const char *root, struct SecriskScanner **out);

// Set one configuration key, as `--set key=value` would.
//
// # Safety
// `scanner` must come from [`secrisk_scanner_new`]; strings must be
// NUL-terminated.
enum SecriskStatus secrisk_scanner_set(struct SecriskScanner *scanner,
                                       const char *key,
                                       const char *value);

// Run the scan and return the JSON report in `*json_out`. `exit_code_out`
// (optional) receives 0, or 2 when a finding reaches the alert threshold.
//
// # Safety
// `scanner` must come from [`secrisk_scanner_new`]; `json_out` must be
// writable. Free the report with [`secrisk_string_free`].
enum SecriskStatus secrisk_scanner_run(const struct SecriskScanner *scanner,
                                       char **json_out,
                                       int32_t *exit_code_out);

// # Safety
// `scanner` must come from [`secrisk_scanner_new`] and not be used again.
void secrisk_scanner_free(struct SecriskScanner *scanner);

// # Safety
// `s` must be a string returned by this library, freed once.
void secrisk_string_free(char *s);

// Message for the last failed call on this thread; empty after success.
// Valid until the next call into the library on the same thread.
const char *secrisk_last_error_message(void);

// Score for a value level (`HIGH`, `MODERATE`, `LOW`, `UNSPECIFIED`) and
// an ease level (`EASY`, `MODERATE`, `DIFFICULT`, `VERY_DIFFICULT`) on the
// standard scales.
//
// # Safety
// Strings must be NUL-terminated; `out` must be writable.
enum SecriskStatus secrisk_risk_score(const char *value, const char *ease, uint32_t *out);

// Jaro-Winkler and Ratcliff-Obershelp similarity of two strings; either
// output pointer may be null.
//
// # Safety
// Strings must be NUL-terminated.
enum SecriskStatus secrisk_similarity(const char *a,
                                      const char *b,
                                      double *jaro_winkler_out,
                                      double *ratcliff_out);

// Library version; static, do not free.
const char *secrisk_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SECRISK_H */
