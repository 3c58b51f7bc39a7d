#ifndef SURVIVAL_H
#define SURVIVAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum SgFitMethod {
  SG_FIT_METHOD_LOG_BIN_LEAST_SQUARES = 0,
  SG_FIT_METHOD_MLE_DISCRETE = 1,
} SgFitMethod;

typedef enum SgLevel {
  SG_LEVEL_LIMITED = 0,
  SG_LEVEL_CAPABLE = 1,
  SG_LEVEL_AUTONOMOUS = 2,
} SgLevel;

typedef enum SgStatus {
  SG_STATUS_OK = 0,
  SG_STATUS_NULL_POINTER = 1,
  SG_STATUS_INVALID_ARGUMENT = 2,
  SG_STATUS_INSUFFICIENT_DATA = 3,
  SG_STATUS_NON_EXTRAPOLABLE = 4,
  SG_STATUS_OUT_OF_BOUNDS = 5,
  SG_STATUS_BUFFER_TOO_SMALL = 6,
  SG_STATUS_IO = 7,
  SG_STATUS_PANIC = 8,
} SgStatus;

/*
 Opaque empirical failure-count distribution.
 */
typedef struct SgDistribution SgDistribution;

/*
 Opaque sandpile lattice.
 */
typedef struct SgSandpile SgSandpile;

/*
 Power-law fit `P(x) = 10^log_c * x^-alpha` over `[x_min, x_max]`.
 */
typedef struct SgFit {
  double alpha;
  double log_c;
  double r_squared;
  double alpha_std_err;
  uint64_t x_min;
  uint64_t x_max;
  size_t points_used;
} SgFit;

/*
 `log10(alpha) = intercept + slope * log10(params)`.
 */
typedef struct SgScalingLine {
  double slope;
  double intercept;
  double r_squared;
} SgScalingLine;

typedef struct SgHardware {
  double bytes_per_param;
  double gpu_memory_bytes;
  double gpu_unit_cost;
  double reference_market_cap;
  double doubling_months;
  double current_max_params;
} SgHardware;

typedef struct SgProjection {
  double required_params;
  double years_until;
  double gpu_count;
  double cost_ratio;
  double neuron_ratio;
} SgProjection;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version, static and NUL-terminated.
 */
const char *sg_version(void);

/*
 Message for the last failed call on this thread, or null. Valid until the
 next failing call on the same thread.
 */
const char *sg_last_error(void);

/*
 Builds a distribution from `n` failure counts. `weights` may be null for
 unit weights.

 # Safety
 `counts` (and `weights` when non-null) must point to `n` readable values;
 `out` must be writable.
 */
enum SgStatus sg_distribution_from_counts(const uint64_t *counts,
                                          const double *weights,
                                          size_t n,
                                          struct SgDistribution **out);

/*
 # Safety
 `dist` must come from `sg_distribution_from_counts` and not be used after.
 */
void sg_distribution_free(struct SgDistribution *dist);

/*
 Number of distinct nonzero failure counts.

 # Safety
 `dist` must be a live handle or null.
 */
size_t sg_distribution_support_len(const struct SgDistribution *dist);

/*
 Probability mass at failure count zero.

 # Safety
 `dist` must be a live handle or null.
 */
double sg_distribution_zero_mass(const struct SgDistribution *dist);

/*
 Fits the decay rate over `[x_min, x_max]`.

 # Safety
 `dist` must be a live handle; `out` must be writable.
 */
enum SgStatus sg_fit_powerlaw(const struct SgDistribution *dist,
                              uint64_t x_min,
                              uint64_t x_max,
                              uint32_t bins_per_decade,
                              enum SgFitMethod method,
                              struct SgFit *out);

/*
 # Safety
 `out` must be writable.
 */
enum SgStatus sg_classify_alpha(double alpha, enum SgLevel *out);

/*
 Fits `log10(alpha)` against `log10(params)` over `n` observations.

 # Safety
 `params` and `alphas` must point to `n` readable values; `out` must be
 writable.
 */
enum SgStatus sg_scaling_fit(const uint64_t *params,
                             const double *alphas,
                             size_t n,
                             struct SgScalingLine *out);

/*
 # Safety
 `out` must be writable.
 */
enum SgStatus sg_hardware_defaults(struct SgHardware *out);

/*
 Size, timeline and hardware needed for `line` to reach `target_alpha`.
 `hw` may be null for the defaults.

 # Safety
 `line` must be readable, `hw` readable or null, `out` writable.
 */
enum SgStatus sg_scaling_project(const struct SgScalingLine *line,
                                 double target_alpha,
                                 const struct SgHardware *hw,
                                 struct SgProjection *out);

/*
 Empty `dimension`-dimensional lattice of the given side length.

 # Safety
 `out` must be writable.
 */
enum SgStatus sg_sandpile_new(size_t dimension, size_t side, struct SgSandpile **out);

/*
 # Safety
 `pile` must come from `sg_sandpile_new` and not be used after.
 */
void sg_sandpile_free(struct SgSandpile *pile);

/*
 Adds a grain at `coords` (length = dimension) and relaxes.

 # Safety
 `pile` must be a live handle, `coords` must point to `ndim` values and
 `topplings` must be writable or null.
 */
enum SgStatus sg_sandpile_drive(struct SgSandpile *pile,
                                const size_t *coords,
                                size_t ndim,
                                uint64_t *topplings);

/*
 Number of lattice sites.

 # Safety
 `pile` must be a live handle or null.
 */
size_t sg_sandpile_sites(const struct SgSandpile *pile);

/*
 Copies the heights into `buf`; site `(c0, c1, ..)` sits at
 `c0 + c1 * side + c2 * side^2 + ..`.

 # Safety
 `pile` must be a live handle; `buf` must have room for `len` values.
 */
enum SgStatus sg_sandpile_heights(const struct SgSandpile *pile, uint32_t *buf, size_t len);

/*
 Whether grains added equal grains on the lattice plus grains lost.

 # Safety
 `pile` must be a live handle or null.
 */
bool sg_sandpile_conserves_grains(const struct SgSandpile *pile);

/*
 Seeded simulation from an empty lattice; writes `drives` avalanche sizes
 into `sizes`. `burn_in` of `UINT64_MAX` selects the default.

 # Safety
 `sizes` must have room for `drives` values.
 */
enum SgStatus sg_sandpile_run(size_t dimension,
                              size_t side,
                              uint64_t burn_in,
                              uint64_t drives,
                              uint64_t seed,
                              uint64_t *sizes,
                              size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SURVIVAL_H */
