/* C interface of libstwave. */
#ifndef STWAVE_H
#define STWAVE_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define STW_API __attribute__((visibility("default")))
#else
#define STW_API
#endif

typedef enum stw_status {
  STW_OK = 0,
  STW_ERR_ARGUMENT = 1,  /* bad input or configuration */
  STW_ERR_NUMERICAL = 2, /* singular factorization, breakdown */
  STW_ERR_IO = 3,
  STW_ERR_MEMORY = 4, /* factorization over the memory budget */
  STW_ERR_INTERNAL = 5
} stw_status;

typedef struct stw_config stw_config;
typedef struct stw_report stw_report;

/* One row of a report. Strings stay valid while the report lives. */
typedef struct stw_level_info {
  int level;
  int nx;
  int nt;
  double h;
  double r;
  double relL2_QT; /* NaN when no oracle */
  double relL2_qT;
  double normL;
  double norm_lambda;
  double norm_f;
  double kappa; /* NaN unless requested */
  double delta; /* NaN unless requested */
  int m_h;
  int cg_iters; /* -1 for direct solves */
  int cg_converged;
  double wall_ms;
  double yh_qT;
  double yobs_qT;
  double ydiff_qT;
  double residual;
  double rcond;
  int near_singular;
  int ok;
  const char* solver;
  const char* error;
} stw_level_info;

STW_API const char* stw_version(void);

/* Message of the last failed call on this thread ("" if none). */
STW_API const char* stw_last_error(void);

/* Nonzero when the linked BLAS passes a triangular-solve check. When it fails and
   OPENBLAS_CORETYPE is unset, the process is re-executed with a safe kernel set (argv
   must then be the program's argument vector); returns 0 if that is not possible. */
STW_API int stw_ensure_blas(char** argv);

STW_API stw_status stw_config_new(stw_config** out);
STW_API void stw_config_free(stw_config* cfg);
STW_API stw_status stw_config_load(stw_config* cfg, const char* path);
STW_API stw_status stw_config_set(stw_config* cfg, const char* key, const char* value);
/* "key=value" in one string. */
STW_API stw_status stw_config_set_pair(stw_config* cfg, const char* assignment);
/* Run flags that are not config keys: "timing", "infsup", "condition". */
STW_API stw_status stw_config_set_flag(stw_config* cfg, const char* flag, int on);
STW_API stw_status stw_config_validate(const stw_config* cfg);
/* Canonical text of every key. Copies at most cap bytes (NUL included); *needed gets the full size. */
STW_API stw_status stw_config_text(const stw_config* cfg, char* buf, size_t cap, size_t* needed);

/* All configured levels. Per-level failures are recorded in the report, not returned. */
STW_API stw_status stw_study_run(const stw_config* cfg, stw_report** out);
/* Finest configured level only; when field_path is non-NULL the nodal values x,t,y are written there. */
STW_API stw_status stw_solve_run(const stw_config* cfg, const char* field_path, stw_report** out);
/* Discrete inf-sup constant per level. */
STW_API stw_status stw_infsup_run(const stw_config* cfg, stw_report** out);

STW_API size_t stw_report_levels(const stw_report* rep);
STW_API stw_status stw_report_level(const stw_report* rep, size_t i, stw_level_info* out);
/* metric: "relL2_QT", "relL2_qT", "normL" or "norm_lambda". NaN and 0 points when unavailable. */
STW_API stw_status stw_report_slope(const stw_report* rep, const char* metric, double* value, int* points);
/* 1 when every level succeeded (and CG converged where used). */
STW_API int stw_report_ok(const stw_report* rep);
/* Writes report.csv, report.json, plot.dat (or infsup.csv, report.json) into the config's out.dir. */
STW_API stw_status stw_report_write(const stw_report* rep, int plot);
STW_API stw_status stw_report_csv(const stw_report* rep, char* buf, size_t cap, size_t* needed);
STW_API void stw_report_free(stw_report* rep);

/* Runs the built-in sanity suite; the log gets one "PASS name" / "FAIL name: detail" line per case. */
STW_API stw_status stw_selftest(int* passed, int* failed, char* log, size_t cap, size_t* needed);

#ifdef __cplusplus
}
#endif

#endif
