#ifndef RANDSWITCH_H
#define RANDSWITCH_H

/* Generated by cbindgen from randswitch-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every FFI call.
 */
enum RsStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  RS_STATUS_OK = 0,
  RS_STATUS_NULL_ARGUMENT = 1,
  RS_STATUS_INVALID_UTF8 = 2,
  RS_STATUS_IO = 3,
  RS_STATUS_PARSE = 4,
  RS_STATUS_INVALID = 5,
  RS_STATUS_UNCONTROLLABLE = 6,
  RS_STATUS_BUDGET_EXHAUSTED = 7,
  RS_STATUS_NUMERIC = 8,
  RS_STATUS_BUFFER_TOO_SMALL = 9,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum RsStatus RsStatus;
#else
typedef int32_t RsStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Certificate verdicts as stable integers.
 */
enum RsVerdict
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  RS_VERDICT_ALMOST_SURELY_STABLE = 0,
  RS_VERDICT_INCONCLUSIVE = 1,
  RS_VERDICT_LIKELY_UNSTABLE = 2,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum RsVerdict RsVerdict;
#else
typedef int32_t RsVerdict;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Opaque stabilization result handle.
 */
typedef struct RsGains RsGains;

/**
 * Opaque generator-set handle.
 */
typedef struct RsGenerators RsGenerators;

/**
 * Opaque switching model handle.
 */
typedef struct RsModel RsModel;

/**
 * Opaque plant handle.
 */
typedef struct RsPlant RsPlant;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Most recent error message on this thread; valid until the next failing
 * call from the same thread.
 */
const char *rs_last_error_message(void);

/**
 * Parses a switching-model file body.
 *
 * # Safety
 * `text` must be NUL-terminated; `out` must be a valid pointer.
 */
RsStatus rs_model_parse(const char *text, struct RsModel **out);

/**
 * Reads and parses a model file from disk.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be a valid pointer.
 */
RsStatus rs_model_load(const char *path, struct RsModel **out);

/**
 * # Safety
 * `model` must be a pointer returned by a model constructor, not yet freed.
 */
void rs_model_free(struct RsModel *model);

/**
 * # Safety
 * `model` must be valid; `out` must be a valid pointer.
 */
RsStatus rs_model_modes(const struct RsModel *model, uint32_t *out);

/**
 * # Safety
 * `model` must be valid; `out` must be a valid pointer.
 */
RsStatus rs_model_mean_dwell(const struct RsModel *model, double *out);

/**
 * Copies the invariant probability vector into `buffer`.
 *
 * # Safety
 * `buffer` must point to at least `capacity` doubles.
 */
RsStatus rs_model_invariant_vector(const struct RsModel *model, double *buffer, uintptr_t capacity);

/**
 * Parses a generator file body.
 *
 * # Safety
 * `text` must be NUL-terminated; `out` must be a valid pointer.
 */
RsStatus rs_generators_parse(const char *text, struct RsGenerators **out);

/**
 * # Safety
 * `path` must be NUL-terminated; `out` must be a valid pointer.
 */
RsStatus rs_generators_load(const char *path, struct RsGenerators **out);

/**
 * # Safety
 * `gens` must be a pointer returned by a generator constructor.
 */
void rs_generators_free(struct RsGenerators *gens);

/**
 * # Safety
 * `gens` must be valid; `out` must be a valid pointer.
 */
RsStatus rs_generators_dimension(const struct RsGenerators *gens, uint32_t *out);

/**
 * Maximal exponent along one sampled path: discrete and continuous rates.
 *
 * # Safety
 * All pointers must be valid.
 */
RsStatus rs_max_lyap_path(const struct RsGenerators *gens,
                          const struct RsModel *model,
                          uintptr_t n,
                          uint64_t seed,
                          double *lambda_discrete,
                          double *lambda_continuous);

/**
 * Monte Carlo estimate of the discrete growth rate with a 95% half-width.
 *
 * # Safety
 * All pointers must be valid.
 */
RsStatus rs_max_lyap_mc(const struct RsGenerators *gens,
                        const struct RsModel *model,
                        uintptr_t n,
                        uintptr_t trials,
                        uint64_t seed,
                        double *mean,
                        double *half_width);

/**
 * Lyapunov spectrum with multiplicities. On entry `*count` is the capacity
 * of both buffers; on success it holds the number of distinct exponents.
 *
 * # Safety
 * `exponents` and `multiplicities` must point to at least `*count` slots.
 */
RsStatus rs_lyap_spectrum(const struct RsGenerators *gens,
                          const struct RsModel *model,
                          uintptr_t n,
                          uint64_t seed,
                          double *exponents,
                          uint32_t *multiplicities,
                          uintptr_t *count);

/**
 * Monte Carlo stability certificate.
 *
 * # Safety
 * All pointers must be valid.
 */
RsStatus rs_stability_certificate(const struct RsGenerators *gens,
                                  const struct RsModel *model,
                                  uintptr_t n,
                                  uintptr_t trials,
                                  uint64_t seed,
                                  RsVerdict *verdict,
                                  double *mean_log_norm,
                                  double *half_width);

/**
 * Parses a plant file body.
 *
 * # Safety
 * `text` must be NUL-terminated; `out` must be a valid pointer.
 */
RsStatus rs_plant_parse(const char *text, struct RsPlant **out);

/**
 * # Safety
 * `path` must be NUL-terminated; `out` must be a valid pointer.
 */
RsStatus rs_plant_load(const char *path, struct RsPlant **out);

/**
 * # Safety
 * `plant` must be a pointer returned by a plant constructor.
 */
void rs_plant_free(struct RsPlant *plant);

/**
 * Sweeps the placement rate until the target decay rate is met.
 *
 * Returns `Ok` with a gains handle on success and `BudgetExhausted` (with
 * the best stage's gains still written to `out`) when the sweep runs out.
 *
 * # Safety
 * All pointers must be valid.
 */
RsStatus rs_stabilize(const struct RsPlant *plant,
                      const struct RsModel *model,
                      double lambda_target,
                      double gamma_max,
                      uintptr_t n,
                      uintptr_t trials,
                      uint64_t seed,
                      struct RsGains **out);

/**
 * # Safety
 * `gains` must be a pointer returned by `rs_stabilize`.
 */
void rs_gains_free(struct RsGains *gains);

/**
 * # Safety
 * All pointers must be valid.
 */
RsStatus rs_gains_summary(const struct RsGains *gains,
                          double *gamma,
                          double *achieved_lambda,
                          double *achieved_upper);

/**
 * Dimensions of the gain for `mode`.
 *
 * # Safety
 * All pointers must be valid.
 */
RsStatus rs_gains_dims(const struct RsGains *gains,
                       uintptr_t mode,
                       uintptr_t *rows,
                       uintptr_t *cols);

/**
 * Copies the row-major gain matrix for `mode` into `buffer`.
 *
 * # Safety
 * `buffer` must point to at least `capacity` doubles.
 */
RsStatus rs_gains_copy(const struct RsGains *gains,
                       uintptr_t mode,
                       double *buffer,
                       uintptr_t capacity);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RANDSWITCH_H */
