#ifndef ISINGZERO_H
#define ISINGZERO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IzStatus {
  IZ_STATUS_OK = 0,
  /**
   * Null pointer, short buffer or non-UTF-8 string.
   */
  IZ_STATUS_INVALID_ARGUMENT = 1,
  IZ_STATUS_VALIDATION = 2,
  IZ_STATUS_RESOURCE = 3,
  IZ_STATUS_INDETERMINATE = 4,
  IZ_STATUS_DOMAIN = 5,
  IZ_STATUS_NUMERICAL = 6,
  IZ_STATUS_IO = 7,
  IZ_STATUS_PANIC = 8,
} IzStatus;

typedef enum IzVerdict {
  IZ_VERDICT_PASS = 0,
  IZ_VERDICT_FAIL = 1,
  IZ_VERDICT_OUT_OF_DOMAIN = 2,
} IzVerdict;

/**
 * Opaque graph handle.
 */
typedef struct IzGraph IzGraph;

typedef struct IzComplex {
  double re;
  double im;
} IzComplex;

typedef struct IzCriticalData {
  double b_c;
  double theta_b;
  /**
   * NaN for `b < 1`.
   */
  double alpha_b;
  struct IzComplex parabolic_r;
  struct IzComplex parabolic_xi;
  double parabolic_residual;
} IzCriticalData;

/**
 * A point of the Riemann sphere; `value` is ignored when `is_infinity` is nonzero.
 */
typedef struct IzSpherePoint {
  struct IzComplex value;
  int32_t is_infinity;
} IzSpherePoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next `iz_*` call on the same thread.
 */
const char *iz_last_error(void);

/**
 * Builds a graph on `n` vertices from `edge_count` pairs stored flat in `edges`.
 *
 * # Safety
 * `edges` must point to `2 * edge_count` values (may be null when `edge_count` is 0);
 * `out` must be writable.
 */
enum IzStatus iz_graph_new(size_t n, const size_t *edges, size_t edge_count, struct IzGraph **out);

/**
 * Parses `{"n": int, "edges": [[u, v], ...]}`.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
enum IzStatus iz_graph_from_json(const char *json, struct IzGraph **out);

/**
 * # Safety
 * `g` must come from `iz_graph_new`/`iz_graph_from_json` and not be freed twice.
 */
void iz_graph_free(struct IzGraph *g);

/**
 * Vertex count, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t iz_graph_vertex_count(const struct IzGraph *g);

/**
 * # Safety
 * `g` must be null or a live handle.
 */
size_t iz_graph_max_degree(const struct IzGraph *g);

/**
 * `Z_G(xi, b)` by enumeration (at most 24 vertices).
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
enum IzStatus iz_z_exact(const struct IzGraph *g,
                         struct IzComplex xi,
                         double b,
                         struct IzComplex *out);

/**
 * Coefficients `a_0..a_n` of `Z_G(., b)`; `coeffs` must hold `n + 1` values.
 *
 * # Safety
 * `g` must be a live handle; `coeffs` must point to `len` writable values; `written` must be writable.
 */
enum IzStatus iz_xi_polynomial(const struct IzGraph *g,
                               double b,
                               double *coeffs,
                               size_t len,
                               size_t *written);

/**
 * `(d - 1) / (d + 1)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum IzStatus iz_critical_b(size_t d, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum IzStatus iz_solve_parabolic(size_t d, double b, struct IzCriticalData *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum IzStatus iz_solve_alpha(size_t d, double b, double *out);

/**
 * Ratio `Z(v = 1) / Z(v = 0)` on the self-avoiding-walk tree rooted at `v`.
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
enum IzStatus iz_ratio_via_saw(const struct IzGraph *g,
                               size_t v,
                               struct IzComplex xi,
                               double b,
                               struct IzSpherePoint *out);

/**
 * Certifies `Z_G(r xi, b) != 0` for degree bound `d`. When `json_out` is not
 * null it receives the certificate JSON, to be released with `iz_string_free`.
 *
 * # Safety
 * `g` must be a live handle; `verdict` must be writable; `json_out` may be null.
 */
enum IzStatus iz_certify(const struct IzGraph *g,
                         size_t d,
                         struct IzComplex xi,
                         double b,
                         double r,
                         enum IzVerdict *verdict,
                         char **json_out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void iz_string_free(char *s);

/**
 * Roots of `coeffs[0] + coeffs[1] x + ... `; `roots` must hold `degree` values.
 *
 * # Safety
 * `coeffs` must point to `len` values; `roots` to `roots_len` writable values; `written` must be writable.
 */
enum IzStatus iz_polynomial_roots(const double *coeffs,
                                  size_t len,
                                  struct IzComplex *roots,
                                  size_t roots_len,
                                  size_t *written);

/**
 * Relative `epsilon`-approximation of `Z_G(r xi, b)`. `log_error` receives
 * `|Log(approx / exact)|`, or NaN when no exact value was computed.
 *
 * # Safety
 * `g` must be a live handle; the out-pointers must be writable.
 */
enum IzStatus iz_approx_partition(const struct IzGraph *g,
                                  size_t d,
                                  struct IzComplex xi,
                                  double b,
                                  double r,
                                  double epsilon,
                                  struct IzComplex *approx,
                                  size_t *m_used,
                                  double *log_error);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* ISINGZERO_H */
