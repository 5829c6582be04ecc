#ifndef MFSDE_H
#define MFSDE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call.
 */
typedef enum MfsdeStatus {
  MFSDE_STATUS_OK = 0,
  MFSDE_STATUS_NULL_POINTER = 1,
  MFSDE_STATUS_INVALID_ARGUMENT = 2,
  MFSDE_STATUS_CONFIG = 3,
  MFSDE_STATUS_NUMERICAL = 4,
  MFSDE_STATUS_INTERNAL = 5,
} MfsdeStatus;

/**
 * Delta estimator selector.
 */
typedef enum MfsdeEstimator {
  MFSDE_ESTIMATOR_BEL = 0,
  MFSDE_ESTIMATOR_PATHWISE = 1,
  MFSDE_ESTIMATOR_FINITE_DIFFERENCE = 2,
} MfsdeEstimator;

/**
 * Parsed run configuration.
 */
typedef struct MfsdeConfig MfsdeConfig;

/**
 * Solved particle system.
 */
typedef struct MfsdeSolution MfsdeSolution;

/**
 * Point estimate with its Monte Carlo standard error.
 */
typedef struct MfsdeEstimate {
  double estimate;
  double std_error;
  uint64_t samples;
} MfsdeEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *mfsde_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mfsde_version(void);

/**
 * Parses a TOML run configuration.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum MfsdeStatus mfsde_config_from_toml(const char *text, struct MfsdeConfig **out);

/**
 * Replaces the configured seed.
 *
 * # Safety
 * `cfg` must come from [`mfsde_config_from_toml`].
 */
enum MfsdeStatus mfsde_config_set_seed(struct MfsdeConfig *cfg, uint64_t seed);

/**
 * # Safety
 * `cfg` must come from [`mfsde_config_from_toml`] or be null.
 */
void mfsde_config_free(struct MfsdeConfig *cfg);

/**
 * Solves the configured model by Picard iteration.
 *
 * # Safety
 * `cfg` must be a live config handle and `out` a valid pointer.
 */
enum MfsdeStatus mfsde_simulate(const struct MfsdeConfig *cfg, struct MfsdeSolution **out);

/**
 * # Safety
 * `sol` must be a live solution handle.
 */
enum MfsdeStatus mfsde_solution_particles(const struct MfsdeSolution *sol, uint64_t *out);

/**
 * Number of time steps `M` (nodes are `0..=M`).
 *
 * # Safety
 * `sol` must be a live solution handle.
 */
enum MfsdeStatus mfsde_solution_steps(const struct MfsdeSolution *sol, uint64_t *out);

/**
 * # Safety
 * `sol` must be a live solution handle.
 */
enum MfsdeStatus mfsde_solution_iterations(const struct MfsdeSolution *sol, uint64_t *out);

/**
 * Copies the particle values at node `k` into `buf`, which must hold
 * exactly the number of particles.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
enum MfsdeStatus mfsde_solution_node(const struct MfsdeSolution *sol,
                                     uint64_t k,
                                     double *buf,
                                     size_t len);

/**
 * Mean of the particles at node `k` with its standard error.
 *
 * # Safety
 * `sol` must be a live solution handle and `out` a valid pointer.
 */
enum MfsdeStatus mfsde_solution_mean(const struct MfsdeSolution *sol,
                                     uint64_t k,
                                     struct MfsdeEstimate *out);

/**
 * # Safety
 * `sol` must come from [`mfsde_simulate`] or be null.
 */
void mfsde_solution_free(struct MfsdeSolution *sol);

/**
 * Delta `∂_x E[Φ(X_T)]` with the configured payoff.
 *
 * # Safety
 * `cfg` must be a live config handle and `out` a valid pointer.
 */
enum MfsdeStatus mfsde_delta(const struct MfsdeConfig *cfg,
                             enum MfsdeEstimator estimator,
                             struct MfsdeEstimate *out);

/**
 * Kantorovich (W1) distance between two empirical measures.
 *
 * # Safety
 * `a` and `b` must point to `na` and `nb` readable doubles.
 */
enum MfsdeStatus mfsde_kantorovich(const double *a,
                                   size_t na,
                                   const double *b,
                                   size_t nb,
                                   double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MFSDE_H */
