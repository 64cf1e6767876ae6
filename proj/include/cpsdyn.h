/* SPDX-License-Identifier: Apache-2.0 */
/*
 * C interface to the cpsdyn engine. All objects are opaque handles owned by
 * the caller and released with the matching *_free function. Functions return
 * a cps_status; on failure cps_last_error() describes the error on the
 * calling thread.
 */
#ifndef CPSDYN_H
#define CPSDYN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define CPS_API __declspec(dllexport)
#else
#define CPS_API __attribute__((visibility("default")))
#endif

typedef enum cps_status {
  CPS_OK = 0,
  CPS_ERR_CONFIG = 1,      /* invalid configuration; message carries the line */
  CPS_ERR_DOMAIN = 2,      /* argument outside a formula's admissible region */
  CPS_ERR_CONVERGENCE = 3, /* an oracle failed its own convergence gate */
  CPS_ERR_RUNTIME = 4,     /* numerical failure or too many failed trajectories */
  CPS_ERR_IO = 5,          /* file system error */
  CPS_ERR_ARG = 6          /* null handle or bad argument */
} cps_status;

typedef struct cps_config cps_config;
typedef struct cps_series cps_series;

/* Receives progress and warning lines. */
typedef void (*cps_log_fn)(const char* line, void* user);

/* Message of the last failed call on this thread ("" if none). */
CPS_API const char* cps_last_error(void);
CPS_API const char* cps_version(void);
/* Library versions, one "name: version" per line. Free with cps_string_free. */
CPS_API char* cps_version_report(void);
CPS_API void cps_string_free(char* s);

CPS_API cps_status cps_config_load_file(const char* path, cps_config** out);
/* Loads a file, applies n dotted-key overrides (YAML values), then validates. */
CPS_API cps_status cps_config_load_file_overrides(const char* path, size_t n, const char* const* keys,
                                                  const char* const* values, cps_config** out);
CPS_API cps_status cps_config_load_string(const char* yaml, cps_config** out);
/* Sets a dotted key (e.g. "ensemble.seed") to a YAML value and revalidates. */
CPS_API cps_status cps_config_set(cps_config* cfg, const char* dotted_key, const char* yaml_value);
/* Resolved configuration with defaults filled in. Free with cps_string_free. */
CPS_API cps_status cps_config_resolved(const cps_config* cfg, char** yaml_out);
CPS_API void cps_config_free(cps_config* cfg);

/* File-producing commands; output goes to the configured directory. */
CPS_API cps_status cps_run(const cps_config* cfg, cps_log_fn log, void* user);
CPS_API cps_status cps_sweep(const cps_config* cfg, cps_log_fn log, void* user);
CPS_API cps_status cps_oracle(const cps_config* cfg, cps_log_fn log, void* user);
CPS_API cps_status cps_marginals(const cps_config* cfg, cps_log_fn log, void* user);

/*
 * Runs the self-test suite. A finite gamma_override replaces the
 * self-inverse gamma (negative control); pass NAN otherwise. The itemized
 * report is returned in *report (free with cps_string_free) and *n_failed
 * receives the number of failed checks.
 */
CPS_API cps_status cps_selftest(double gamma_override, uint64_t seed, char** report, int* n_failed);

/* In-memory results. */
CPS_API cps_status cps_run_series(const cps_config* cfg, cps_series** out);
CPS_API cps_status cps_oracle_series(const cps_config* cfg, cps_series** out);
CPS_API cps_status cps_series_load(const char* csv_path, cps_series** out);
CPS_API cps_status cps_series_save(const cps_series* s, const char* csv_path);
CPS_API size_t cps_series_n_times(const cps_series* s);
CPS_API size_t cps_series_n_columns(const cps_series* s);
CPS_API const char* cps_series_column_name(const cps_series* s, size_t column);
/* Column index by name, or -1. */
CPS_API int cps_series_find(const cps_series* s, const char* name);
CPS_API double cps_series_time(const cps_series* s, size_t t);
CPS_API double cps_series_value(const cps_series* s, size_t column, size_t t);
CPS_API double cps_series_error(const cps_series* s, size_t column, size_t t);
CPS_API long cps_series_n_trajectories(const cps_series* s);
CPS_API long cps_series_n_failed(const cps_series* s);
CPS_API void cps_series_free(cps_series* s);

#ifdef __cplusplus
}
#endif

#endif /* CPSDYN_H */
