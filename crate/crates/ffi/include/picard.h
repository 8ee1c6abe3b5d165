#ifndef PICARD_H
#define PICARD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Sign of the smoothed kernel: `+1` majorant, `-1` minorant.
 */
#define PICARD_SIGN_PLUS 1

#define PICARD_SIGN_MINUS -1

/**
 * Result codes shared by every function.
 */
typedef enum PicardStatus {
  PICARD_STATUS_OK = 0,
  PICARD_STATUS_NULL_POINTER = -1,
  PICARD_STATUS_DOMAIN = -2,
  PICARD_STATUS_PARSE = -3,
  PICARD_STATUS_IO = -4,
  PICARD_STATUS_QUADRATURE = -5,
  PICARD_STATUS_BUDGET = -6,
  PICARD_STATUS_PANIC = -255,
} PicardStatus;

/**
 * Opaque eigenvalue table.
 */
typedef struct PicardTable PicardTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * Valid until the next call on the same thread.
 */
const char *picard_last_error(void);

/**
 * Number of orbit points `gz` with `cosh d(z, gz) <= x`, `z = (x1, x2, y)`.
 *
 * # Safety
 * `out_count` must be null or valid for writes.
 */
enum PicardStatus picard_count(double x, double x1, double x2, double y, uint64_t *out_count);

/**
 * Leading term of the orbit count at cutoff `x`.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum PicardStatus picard_main_term(double x, double *out);

/**
 * Selberg transform of the ball indicator of radius `radius` at `r = re + i im`.
 *
 * # Safety
 * `out_re` and `out_im` must be null or valid for writes.
 */
enum PicardStatus picard_h_ball(double radius,
                                double re,
                                double im,
                                double *out_re,
                                double *out_im);

/**
 * Selberg transform of the smoothed kernel at real `r`.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum PicardStatus picard_h_pm(double radius, double eta, int32_t sign, double r, double *out);

/**
 * Smoothed orbit count at `z = (x1, x2, y)`.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum PicardStatus picard_count_smoothed(double radius,
                                        double eta,
                                        int32_t sign,
                                        double x1,
                                        double x2,
                                        double y,
                                        double *out);

/**
 * Remainder exponent for `theta = theta_num/theta_den`, `q = q_num/q_den`,
 * returned in lowest terms.
 *
 * # Safety
 * `out_num` and `out_den` must be null or valid for writes.
 */
enum PicardStatus picard_remainder_exponent(int64_t theta_num,
                                            int64_t theta_den,
                                            int64_t q_num,
                                            int64_t q_den,
                                            int64_t *out_num,
                                            int64_t *out_den);

/**
 * Synthetic table of `n` entries following the Weyl law.
 *
 * # Safety
 * `out_table` must be null or valid for writes.
 */
enum PicardStatus picard_table_synthetic(size_t n, struct PicardTable **out_table);

/**
 * Table copied from `len` spectral parameters, nondecreasing.
 *
 * # Safety
 * `values` must point to `len` readable doubles (or be null when `len` is 0);
 * `out_table` must be null or valid for writes.
 */
enum PicardStatus picard_table_from_values(const double *values,
                                           size_t len,
                                           struct PicardTable **out_table);

/**
 * Table read from a CSV file with header `r`.
 *
 * # Safety
 * `path` must be null or a NUL-terminated string; `out_table` must be null
 * or valid for writes.
 */
enum PicardStatus picard_table_ingest(const char *path, struct PicardTable **out_table);

/**
 * Number of entries.
 *
 * # Safety
 * `table` must be null or a live handle; `out_len` null or valid for writes.
 */
enum PicardStatus picard_table_len(const struct PicardTable *table_, size_t *out_len);

/**
 * `N(T) / weyl(T)`; requires `t > 1`.
 *
 * # Safety
 * `table` must be null or a live handle; `out` null or valid for writes.
 */
enum PicardStatus picard_table_weyl_ratio(const struct PicardTable *table_, double t, double *out);

/**
 * `|sum_{r_j <= t} x^{i r_j}|`.
 *
 * # Safety
 * `table` must be null or a live handle; `out` null or valid for writes.
 */
enum PicardStatus picard_table_spectral_sum(const struct PicardTable *table_,
                                            double t,
                                            double x,
                                            double *out);

/**
 * `sum_j h±(r_j)` by direct summation; `out_tail` receives the bound on the
 * omitted tail and may be null.
 *
 * # Safety
 * `table` must be null or a live handle; `out` null or valid for writes;
 * `out_tail` null or valid for writes.
 */
enum PicardStatus picard_table_sum_h(const struct PicardTable *table_,
                                     double radius,
                                     double eta,
                                     int32_t sign,
                                     double *out,
                                     double *out_tail);

/**
 * Releases a table. Null is ignored.
 *
 * # Safety
 * `table` must be null or a handle not yet freed.
 */
void picard_table_free(struct PicardTable *table);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PICARD_H */
