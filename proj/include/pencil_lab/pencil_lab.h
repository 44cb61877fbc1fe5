#ifndef PENCIL_LAB_H
#define PENCIL_LAB_H

#include <stddef.h>

#if defined(PL_BUILDING_LIBRARY)
#define PL_API __attribute__((visibility("default")))
#else
#define PL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct pl_expr pl_expr;
typedef struct pl_run pl_run;

typedef enum {
  PL_OK = 0,
  PL_ERR_INVALID_ARGUMENT = 1,
  PL_ERR_PARSE = 2,
  PL_ERR_CONFIG = 3,
  PL_ERR_DOMAIN = 4,
  PL_ERR_PRECONDITION = 5,
  PL_ERR_NUMERICAL = 6,
  PL_ERR_INTERNAL = 7
} pl_status;

typedef enum { PL_VERDICT_PASS = 0, PL_VERDICT_FAIL = 1, PL_VERDICT_INCONCLUSIVE = 2, PL_VERDICT_NONE = 3 } pl_verdict;

PL_API const char* pl_version(void);
PL_API const char* pl_status_string(pl_status status);

/* Message and parse offset (1-based, 0 if none) of the last failure on this thread. */
PL_API const char* pl_last_error(void);
PL_API size_t pl_last_error_offset(void);

/* Expressions over R1..R<dimension>. */
PL_API pl_status pl_expr_parse(const char* text, int dimension, pl_expr** out);
PL_API pl_status pl_expr_eval(const pl_expr* e, const double* point, size_t n, double* out);
PL_API pl_status pl_expr_diff(const pl_expr* e, int axis, pl_expr** out);
/* Writes at most cap bytes including the terminator; *needed gets the full length. */
PL_API pl_status pl_expr_to_string(const pl_expr* e, char* buf, size_t cap, size_t* needed);
PL_API void pl_expr_free(pl_expr* e);

/* Runs of the command layer. Overrides apply to the next execute. */
PL_API pl_status pl_run_create(pl_run** out);
PL_API pl_status pl_run_set_lambdas(pl_run* run, const double* lambdas, size_t count);
PL_API pl_status pl_run_set_grid(pl_run* run, int points);
PL_API pl_status pl_run_set_tolerance(pl_run* run, double pass);
PL_API pl_status pl_run_set_output_dir(pl_run* run, const char* dir);
PL_API pl_status pl_run_execute(pl_run* run, const char* command, const char* config_json);
PL_API pl_verdict pl_run_verdict(const pl_run* run);
/* Owned by the run; valid until the next execute or destroy. */
PL_API const char* pl_run_report_json(const pl_run* run);
PL_API const char* pl_run_digest(const pl_run* run);
PL_API double pl_run_wall_time(const pl_run* run);
PL_API size_t pl_run_artifact_count(const pl_run* run);
PL_API const char* pl_run_artifact(const pl_run* run, size_t i);
PL_API void pl_run_destroy(pl_run* run);

#ifdef __cplusplus
}
#endif

#endif
