#ifndef CHIRPFRAME_H
#define CHIRPFRAME_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CfStatus {
  CF_STATUS_OK = 0,
  CF_STATUS_DOMAIN = 1,
  CF_STATUS_GRID = 2,
  CF_STATUS_DEGENERATE = 3,
  CF_STATUS_NO_ROOT = 4,
  CF_STATUS_NO_ZERO = 5,
  CF_STATUS_MULTIPLE_ZERO = 6,
  CF_STATUS_CONTOUR = 7,
  CF_STATUS_NULL_POINTER = 8,
  CF_STATUS_PANIC = 9,
} CfStatus;

/**
 * Opaque `c exp(-pi w x^2 + l x)`.
 */
typedef struct CfAtom CfAtom;

typedef struct CfComplex {
  double re;
  double im;
} CfComplex;

/**
 * `Q = R_theta U_lambda D_{alpha,beta}`.
 */
typedef struct CfQrFactors {
  double theta;
  double lambda;
  double alpha;
  double beta;
} CfQrFactors;

typedef struct CfChirpDesign {
  double lambda;
  double lambda_prime;
  double gamma;
  double u;
  double v;
  double r;
  struct CfComplex s;
} CfChirpDesign;

typedef struct CfZeroCertificate {
  double t;
  double omega;
  int64_t winding;
  double simplicity_constant;
  size_t search_resolution;
  double residual;
} CfZeroCertificate;

typedef struct CfResolution {
  double l;
  size_t n;
  size_t m;
} CfResolution;

typedef struct CfBoundEstimate {
  double a_est;
  double b_est;
  /**
   * Estimates with twice the grid nodes.
   */
  double refined_a_est;
  double refined_b_est;
  size_t nodes;
  size_t atoms;
  size_t test_dimension;
} CfBoundEstimate;

/**
 * `certified` is 1 when `a_lower > 0` was established; otherwise `margin`
 * carries the failed dominance margin and the bounds are zero.
 */
typedef struct CfCertification {
  int32_t certified;
  double a_lower;
  double b_upper;
  double margin;
  double tail;
} CfCertification;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. Valid until the next
 * call into this library from the same thread.
 */
const char *cf_last_error_message(void);

enum CfStatus cf_atom_new(struct CfComplex amplitude,
                          struct CfComplex quad,
                          struct CfComplex lin,
                          struct CfAtom **atom);

/**
 * The standard Gaussian `exp(-pi x^2)`.
 */
struct CfAtom *cf_atom_gaussian(void);

void cf_atom_free(struct CfAtom *atom);

enum CfStatus cf_atom_coefficients(const struct CfAtom *atom,
                                   struct CfComplex *amplitude,
                                   struct CfComplex *quad,
                                   struct CfComplex *lin);

enum CfStatus cf_atom_evaluate(const struct CfAtom *atom, double x, struct CfComplex *value);

enum CfStatus cf_atom_l2_norm(const struct CfAtom *atom, double *norm);

enum CfStatus cf_atom_inner_product(const struct CfAtom *f,
                                    const struct CfAtom *g,
                                    struct CfComplex *value);

/**
 * New handle holding the Fourier transform.
 */
enum CfStatus cf_atom_fourier(const struct CfAtom *atom, struct CfAtom **result);

/**
 * New handle holding `h_rate * g`.
 */
enum CfStatus cf_atom_multiply_chirp(const struct CfAtom *atom,
                                     double rate,
                                     struct CfAtom **result);

/**
 * New handle holding the fractional Fourier transform by `theta`.
 */
enum CfStatus cf_atom_frft(const struct CfAtom *atom, double theta, struct CfAtom **result);

/**
 * `matrix` points to four entries in row-major order.
 */
enum CfStatus cf_factor_qr(const double *matrix, struct CfQrFactors *factors);

enum CfStatus cf_chirp_design(double lambda, struct CfChirpDesign *design);

/**
 * Nonzero `lambda` with `G(lambda) = rho`.
 */
enum CfStatus cf_solve_lambda(double rho, double *lambda);

/**
 * `Z(h_lambda phi_gamma)(t, omega)`.
 */
enum CfStatus cf_zak_theta(double lambda,
                           double gamma,
                           double t,
                           double omega,
                           struct CfComplex *value);

enum CfStatus cf_find_zero(double lambda,
                           double gamma,
                           size_t n,
                           struct CfZeroCertificate *certificate);

/**
 * The default grid: `L = 6`, `N = 512`, `M = 12`.
 */
struct CfResolution cf_resolution_default(void);

/**
 * Finite-section bounds of `G(window, Q Z^2)`; `matrix` is row-major.
 */
enum CfStatus cf_estimate_bounds(const struct CfAtom *window,
                                 const double *matrix,
                                 struct CfResolution resolution,
                                 struct CfBoundEstimate *estimate);

enum CfStatus cf_janssen_certify(const struct CfAtom *window,
                                 double alpha,
                                 double beta,
                                 size_t terms,
                                 struct CfCertification *certification);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHIRPFRAME_H */
