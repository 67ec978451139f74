#ifndef HBLU_H
#define HBLU_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum HbluStatus {
  HBLU_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  HBLU_STATUS_NULL_POINTER = 1,
  /**
   * Malformed input: bad CSC arrays, unreadable file, bad option.
   */
  HBLU_STATUS_INVALID_INPUT = 2,
  /**
   * The matrix is structurally or numerically singular.
   */
  HBLU_STATUS_SINGULAR = 3,
  /**
   * The matrix pattern differs from the one the plan was built for.
   */
  HBLU_STATUS_PATTERN_MISMATCH = 4,
  /**
   * A caller buffer is too small; the required size was written back.
   */
  HBLU_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * Internal failure (a caught panic).
   */
  HBLU_STATUS_INTERNAL = 6,
} HbluStatus;

/**
 * Numeric LU factor.
 */
typedef struct HbluFactor HbluFactor;

/**
 * Square sparse matrix in compressed sparse column form.
 */
typedef struct HbluMatrix HbluMatrix;

/**
 * Orderings and schedule for one sparsity pattern.
 */
typedef struct HbluPlan HbluPlan;

/**
 * Analysis options. Zero in `nd_leaves` or `nd_threshold` selects the
 * default; a negative `pivot_tol` selects 0.001.
 */
typedef struct HbluOptions {
  size_t threads;
  size_t nd_leaves;
  size_t nd_threshold;
  double pivot_tol;
  /**
   * Nonzero disables the block triangular form.
   */
  int32_t no_btf;
} HbluOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * The string stays valid until the next call on the same thread.
 */
const char *hblu_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *hblu_version(void);

/**
 * Default options for `threads` worker threads.
 */
struct HbluOptions hblu_options_default(size_t threads);

/**
 * Copies an `n x n` CSC matrix with `col_ptr[n]` entries.
 *
 * # Safety
 * `col_ptr` must hold `n + 1` elements, `row_idx` and `values` at least
 * `col_ptr[n]` elements, and `out` must be writable.
 */
enum HbluStatus hblu_matrix_from_csc(size_t n,
                                     const size_t *col_ptr,
                                     const size_t *row_idx,
                                     const double *values,
                                     struct HbluMatrix **out);

/**
 * Reads a real Matrix Market coordinate file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum HbluStatus hblu_matrix_read_mm(const char *path, struct HbluMatrix **out);

/**
 * Dimension and stored entries of a matrix.
 *
 * # Safety
 * `m` must be a live handle; `n` and `nnz` may be null.
 */
enum HbluStatus hblu_matrix_shape(const struct HbluMatrix *m, size_t *n, size_t *nnz);

/**
 * # Safety
 * `m` must be null or a handle from this library, not yet freed.
 */
void hblu_matrix_free(struct HbluMatrix *m);

/**
 * Runs the symbolic phase. A null `opts` uses single-threaded defaults.
 *
 * # Safety
 * `m` must be a live handle, `opts` null or valid, `out` writable.
 */
enum HbluStatus hblu_analyze(const struct HbluMatrix *m,
                             const struct HbluOptions *opts,
                             struct HbluPlan **out);

/**
 * Serializes a plan. With `buf` null or `cap` too small, writes the needed
 * size to `len` and returns `BufferTooSmall`.
 *
 * # Safety
 * `p` must be a live handle, `buf` null or writable for `cap` bytes, and
 * `len` writable.
 */
enum HbluStatus hblu_plan_to_bytes(const struct HbluPlan *p, uint8_t *buf, size_t cap, size_t *len);

/**
 * Restores a plan written by [`hblu_plan_to_bytes`].
 *
 * # Safety
 * `buf` must be readable for `len` bytes and `out` writable.
 */
enum HbluStatus hblu_plan_from_bytes(const uint8_t *buf, size_t len, struct HbluPlan **out);

/**
 * # Safety
 * `p` must be null or a handle from this library, not yet freed.
 */
void hblu_plan_free(struct HbluPlan *p);

/**
 * Numeric factorization of `m` under `p`. A singular matrix returns
 * `Singular` and no factor.
 *
 * # Safety
 * `p` and `m` must be live handles and `out` writable.
 */
enum HbluStatus hblu_factor(const struct HbluPlan *p,
                            const struct HbluMatrix *m,
                            struct HbluFactor **out);

/**
 * Refactors in place with new values on the plan's pattern. On failure
 * the previous factor is left unchanged.
 *
 * # Safety
 * `p` and `f` must be live handles; `values` must hold `nnz` elements.
 */
enum HbluStatus hblu_refactor(const struct HbluPlan *p,
                              struct HbluFactor *f,
                              const double *values,
                              size_t nnz);

/**
 * Solves `A x = b`; `b` and `x` hold `n` elements and may alias.
 *
 * # Safety
 * `f` must be a live handle, `b` readable and `x` writable for `n` values.
 */
enum HbluStatus hblu_solve(const struct HbluFactor *f, const double *b, double *x, size_t n);

/**
 * Deterministic checksum of the factor's pivots and values.
 *
 * # Safety
 * `f` must be a live handle and `out` writable.
 */
enum HbluStatus hblu_factor_checksum(const struct HbluFactor *f, uint64_t *out);

/**
 * Stored entries of `L` and `U`.
 *
 * # Safety
 * `f` must be a live handle and `out` writable.
 */
enum HbluStatus hblu_factor_nnz(const struct HbluFactor *f, size_t *out);

/**
 * # Safety
 * `f` must be null or a handle from this library, not yet freed.
 */
void hblu_factor_free(struct HbluFactor *f);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HBLU_H */
