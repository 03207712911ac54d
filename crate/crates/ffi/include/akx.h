/* C interface to the akx series and kernel library. Release every handle with its _free function and every returned string with akx_string_free. */

#ifndef AKX_H
#define AKX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AkxStatus {
  AKX_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  AKX_STATUS_NULL_ARGUMENT = 1,
  /**
   * Malformed JSON, mismatched algebras, bad sizes and similar input errors.
   */
  AKX_STATUS_INVALID_INPUT = 2,
  /**
   * The numerics refused a certificate: non-convergence, a point outside
   * the radius, a pairing sequence that is not square summable.
   */
  AKX_STATUS_NOT_CERTIFIED = 3,
  AKX_STATUS_PANIC = 4,
} AkxStatus;

/**
 * An algebra element.
 */
typedef struct AkxElement AkxElement;

/**
 * An analytic function given by Taylor coefficients.
 */
typedef struct AkxFunction AkxFunction;

/**
 * A continuous linear functional on an algebra.
 */
typedef struct AkxFunctional AkxFunctional;

/**
 * A scalar kernel given by its coefficient grid.
 */
typedef struct AkxKernel AkxKernel;

typedef struct AkxComplex {
  double re;
  double im;
} AkxComplex;

typedef struct AkxPsdReport {
  size_t size;
  double min_eigenvalue;
  double hermitian_defect;
  double tolerance;
  bool pass;
} AkxPsdReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The last failure message on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread; do not free it.
 */
const char *akx_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` is null or a string obtained from this library and not yet freed.
 */
void akx_string_free(char *s);

/**
 * Parses `{"kind": ..., "coords": [[re, im], ...]}` into a new element.
 *
 * # Safety
 * `json` is a nul-terminated string; `out` is valid for a pointer write.
 */
enum AkxStatus akx_element_from_json(const char *json, struct AkxElement **out);

/**
 * Writes the element as JSON; release the string with [`akx_string_free`].
 *
 * # Safety
 * `e` is a live element handle; `out` is valid for a pointer write.
 */
enum AkxStatus akx_element_to_json(const struct AkxElement *e, char **out);

/**
 * Algebra dimension of the element, or 0 for a null handle.
 *
 * # Safety
 * `e` is null or a live element handle.
 */
size_t akx_element_dim(const struct AkxElement *e);

/**
 * Copies the coordinates into `coords[0..len]`; `len` must equal the dimension.
 *
 * # Safety
 * `e` is a live element handle; `coords` is valid for `len` writes.
 */
enum AkxStatus akx_element_coords(const struct AkxElement *e,
                                  struct AkxComplex *coords,
                                  size_t len);

/**
 * # Safety
 * `e` is null or an element handle not yet freed.
 */
void akx_element_free(struct AkxElement *e);

/**
 * Parses a functional; the JSON shape is that of an element.
 *
 * # Safety
 * `json` is a nul-terminated string; `out` is valid for a pointer write.
 */
enum AkxStatus akx_functional_from_json(const char *json, struct AkxFunctional **out);

/**
 * # Safety
 * `a` is null or a functional handle not yet freed.
 */
void akx_functional_free(struct AkxFunctional *a);

/**
 * A named function (`exp`, `sin`, `cos`, `geom`) with `terms` coefficients.
 *
 * # Safety
 * `name` is a nul-terminated string; `out` is valid for a pointer write.
 */
enum AkxStatus akx_function_preset(const char *name, size_t terms, struct AkxFunction **out);

/**
 * Parses `{"coeffs": [[re, im], ...], "radius": number | "inf"}`.
 *
 * # Safety
 * `json` is a nul-terminated string; `out` is valid for a pointer write.
 */
enum AkxStatus akx_function_from_json(const char *json, struct AkxFunction **out);

/**
 * # Safety
 * `f` is null or a function handle not yet freed.
 */
void akx_function_free(struct AkxFunction *f);

/**
 * A named kernel: `fock`, `geom`, or `poly<d>`.
 *
 * # Safety
 * `name` is a nul-terminated string; `out` is valid for a pointer write.
 */
enum AkxStatus akx_kernel_preset(const char *name, struct AkxKernel **out);

/**
 * Parses `{"p": 1, "c": [[[re, im], ...], ...], "radius": number | "inf"}`.
 *
 * # Safety
 * `json` is a nul-terminated string; `out` is valid for a pointer write.
 */
enum AkxStatus akx_kernel_from_json(const char *json, struct AkxKernel **out);

/**
 * # Safety
 * `k` is null or a kernel handle not yet freed.
 */
void akx_kernel_free(struct AkxKernel *k);

/**
 * `f(z + A)` truncated at `order` terms or later, whichever certifies the
 * tail below `tail_tol`. On success `*out` is a new element and `*tail`
 * (if not null) the certified tail bound.
 *
 * # Safety
 * Handles are live; `out` is valid for a pointer write; `tail` is null or
 * valid for a write.
 */
enum AkxStatus akx_eval_ext(const struct AkxFunction *f,
                            struct AkxComplex z,
                            const struct AkxElement *a,
                            size_t order,
                            double tail_tol,
                            struct AkxElement **out,
                            double *tail);

/**
 * `Σ ⟨a, Aⁿ⟩ f⁽ⁿ⁾(z)/n!` with its tail bound.
 *
 * # Safety
 * Handles are live; `out` is valid for a write; `tail` is null or valid
 * for a write.
 */
enum AkxStatus akx_eval_weak(const struct AkxFunction *f,
                             struct AkxComplex z,
                             const struct AkxElement *a,
                             const struct AkxFunctional *functional,
                             size_t order,
                             double tail_tol,
                             struct AkxComplex *out,
                             double *tail);

/**
 * `K(z, w)` for a scalar kernel, with the truncation tail of the grid.
 *
 * # Safety
 * `k` is a live kernel handle; `out` is valid for a write; `tail` is null
 * or valid for a write.
 */
enum AkxStatus akx_kernel_eval(const struct AkxKernel *k,
                               struct AkxComplex z,
                               struct AkxComplex w,
                               struct AkxComplex *out,
                               double *tail);

/**
 * The Fock extended kernel between `(z1, A1, a1)` and `(z2, A2, a2)`,
 * truncated at `order` terms.
 *
 * # Safety
 * Handles are live; `out` is valid for a write; `tail` is null or valid
 * for a write.
 */
enum AkxStatus akx_fock_extended(struct AkxComplex z1,
                                 const struct AkxElement *a1,
                                 const struct AkxFunctional *f1,
                                 struct AkxComplex z2,
                                 const struct AkxElement *a2,
                                 const struct AkxFunctional *f2,
                                 size_t order,
                                 struct AkxComplex *out,
                                 double *tail);

/**
 * Hermitian defect, smallest eigenvalue and verdict for the row-major
 * `n × n` matrix `data`. A matrix whose defect exceeds the tolerance
 * fails with `AKX_STATUS_INVALID_INPUT`.
 *
 * # Safety
 * `data` is valid for `n * n` reads; `out` is valid for a write.
 */
enum AkxStatus akx_psd_report(const struct AkxComplex *data, size_t n, struct AkxPsdReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AKX_H */
