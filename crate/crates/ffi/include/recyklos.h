#ifndef RECYKLOS_H
#define RECYKLOS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 The system is symmetric (`rk_session_solve*` flags).
 */
#define RK_SYMMETRIC 1

/*
 The system is symmetric positive definite; implies [`RK_SYMMETRIC`].
 */
#define RK_SPD 2

/*
 Result codes.
 */
typedef enum RkStatus {
  RK_STATUS_OK = 0,
  /*
   The call completed but at least one solve missed its tolerance.
   */
  RK_STATUS_NOT_CONVERGED = 1,
  RK_STATUS_INVALID_ARGUMENT = 2,
  RK_STATUS_IO = 3,
  RK_STATUS_PARSE = 4,
  RK_STATUS_NUMERICAL = 5,
  RK_STATUS_PANIC = 6,
} RkStatus;

/*
 Why an iteration stopped.
 */
typedef enum RkTermination {
  RK_TERMINATION_TOLERANCE = 0,
  RK_TERMINATION_MAX_ITER = 1,
  RK_TERMINATION_BREAKDOWN = 2,
  RK_TERMINATION_FAILED = 3,
} RkTermination;

/*
 Opaque sparse matrix.
 */
typedef struct RkMatrix RkMatrix;

/*
 Opaque solver session: carries the recycle space between solves.
 */
typedef struct RkSession RkSession;

/*
 Per-solve summary.
 */
typedef struct RkSolveInfo {
  size_t iterations;
  size_t matvecs;
  size_t recycle_dim;
  double initial_resnorm;
  double final_resnorm;
  bool converged;
  enum RkTermination termination;
} RkSolveInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread; empty if none. Valid
 until the next failing call on the same thread.
 */
const char *rk_last_error(void);

/*
 Library version, a static string.
 */
const char *rk_version(void);

/*
 Builds a matrix from `nnz` zero-based (row, col, value) triplets;
 duplicates are summed.

 # Safety
 `rows`, `cols`, `vals` point to `nnz` elements; `out` is writable.
 */
enum RkStatus rk_matrix_from_triplets(size_t nrows,
                                      size_t ncols,
                                      size_t nnz,
                                      const size_t *rows,
                                      const size_t *cols,
                                      const double *vals,
                                      struct RkMatrix **out);

/*
 Reads a Matrix Market coordinate file.

 # Safety
 `path` is a NUL-terminated string; `out` is writable.
 */
enum RkStatus rk_matrix_read_mtx(const char *path, struct RkMatrix **out);

/*
 # Safety
 `m` is a live handle or null.
 */
size_t rk_matrix_nrows(const struct RkMatrix *m);

/*
 # Safety
 `m` is a live handle or null.
 */
size_t rk_matrix_ncols(const struct RkMatrix *m);

/*
 Stored entries.

 # Safety
 `m` is a live handle or null.
 */
size_t rk_matrix_nnz(const struct RkMatrix *m);

/*
 `y = A x`, with `x` of length ncols and `y` of length nrows.

 # Safety
 `m` is a live handle; `x` and `y` have the stated lengths.
 */
enum RkStatus rk_matrix_apply(const struct RkMatrix *m, const double *x, double *y);

/*
 # Safety
 `m` is a handle from this library or null; it must not be used afterwards.
 */
void rk_matrix_free(struct RkMatrix *m);

/*
 Creates a session from manifest-shaped JSON: `solver`, `selector`,
 `warm_start`, `recycle_across_systems`. Listed systems are ignored.

 # Safety
 `config_json` is a NUL-terminated string; `out` is writable.
 */
enum RkStatus rk_session_new(const char *config_json, struct RkSession **out);

/*
 Systems solved so far.

 # Safety
 `s` is a live handle or null.
 */
size_t rk_session_len(const struct RkSession *s);

/*
 # Safety
 `s` is a handle from this library or null; it must not be used afterwards.
 */
void rk_session_free(struct RkSession *s);

/*
 Solves `A x = b` as the next system of the session. `flags` combines
 [`RK_SYMMETRIC`] and [`RK_SPD`]; the symmetric solvers require them.
 `x_out` has length n; `info_out` may be null.

 Returns `RK_STATUS_NOT_CONVERGED` if the tolerance was missed, with the last
 iterate in `x_out`. If the solver itself failed, `x_out` is NaN and
 `rk_last_error` names the reason.

 # Safety
 Handles are live; `b` and `x_out` hold n values; `info_out` is writable
 or null.
 */
enum RkStatus rk_session_solve(struct RkSession *s,
                               const struct RkMatrix *a,
                               const double *b,
                               uint32_t flags,
                               double *x_out,
                               struct RkSolveInfo *info_out);

/*
 Solves the family `(A + shift_i I) x_i = b` over one shared basis. The
 shifts must include 0 and be distinct, and the matrix must be
 symmetric. `x_out` holds `nshifts` solutions of length n one after
 another; `info_out` holds `nshifts` entries or is null.

 # Safety
 Handles are live; `b` holds n values, `shifts` nshifts values, `x_out`
 n * nshifts values; `info_out` is writable for nshifts entries or null.
 */
enum RkStatus rk_session_solve_shifted(struct RkSession *s,
                                       const struct RkMatrix *a,
                                       const double *b,
                                       const double *shifts,
                                       size_t nshifts,
                                       double *x_out,
                                       struct RkSolveInfo *info_out);

/*
 Runs a manifest file and writes its JSON report, like `recyklos solve`.
 Returns `RK_STATUS_NOT_CONVERGED` if any system missed its tolerance.

 # Safety
 Both arguments are NUL-terminated strings.
 */
enum RkStatus rk_run_manifest(const char *manifest_path, const char *report_path);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* RECYKLOS_H */
