#ifndef ZAKHAROV_SDE_H
#define ZAKHAROV_SDE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum ZsStatus {
  ZS_STATUS_OK = 0,
  ZS_STATUS_NULL_POINTER = 1,
  ZS_STATUS_INVALID_ARGUMENT = 2,
  ZS_STATUS_CONFIG = 3,
  ZS_STATUS_BLOW_UP = 4,
  ZS_STATUS_BUFFER_TOO_SMALL = 5,
  ZS_STATUS_IO = 6,
  ZS_STATUS_INTERNAL = 99,
} ZsStatus;

/**
 * Opaque experiment configuration.
 */
typedef struct ZsConfig ZsConfig;

/**
 * Opaque limit-equation trajectory.
 */
typedef struct ZsNls ZsNls;

/**
 * Opaque Zakharov trajectory: simulator, state and increment stream.
 */
typedef struct ZsZakharov ZsZakharov;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into the library on this thread.
 */
const char *zs_last_error(void);

struct ZsConfig *zs_config_default(void);

/**
 * Parses TOML text; `*out` receives a new handle on success.
 */
enum ZsStatus zs_config_from_toml(const char *text, struct ZsConfig **out);

enum ZsStatus zs_config_set_seed(struct ZsConfig *config, uint64_t seed);

enum ZsStatus zs_config_num_points(const struct ZsConfig *config, size_t *out);

/**
 * # Safety
 * `config` must be null or a handle from this library, freed at most once.
 */
void zs_config_free(struct ZsConfig *config);

/**
 * New trajectory at `epsilon` for Monte Carlo path `path`, started from the
 * config's initial profile and driver start.
 */
enum ZsStatus zs_zakharov_new(const struct ZsConfig *config,
                              double epsilon,
                              uint64_t path,
                              struct ZsZakharov **out);

enum ZsStatus zs_zakharov_step(struct ZsZakharov *handle, size_t steps);

enum ZsStatus zs_zakharov_time(const struct ZsZakharov *handle, double *out);

enum ZsStatus zs_zakharov_mass(const struct ZsZakharov *handle, double *out);

/**
 * Copies the Schrödinger field into `re`/`im`, each holding `len` values.
 */
enum ZsStatus zs_zakharov_field(const struct ZsZakharov *handle,
                                double *re,
                                double *im,
                                size_t len);

/**
 * # Safety
 * `handle` must be null or a handle from this library, freed at most once.
 */
void zs_zakharov_free(struct ZsZakharov *handle);

/**
 * New limit trajectory for path `path`; it draws the same increments as a
 * Zakharov trajectory created with the same config, path and `epsilon`.
 */
enum ZsStatus zs_nls_new(const struct ZsConfig *config,
                         double epsilon,
                         uint64_t path,
                         struct ZsNls **out);

enum ZsStatus zs_nls_step(struct ZsNls *handle, size_t steps);

enum ZsStatus zs_nls_time(const struct ZsNls *handle, double *out);

enum ZsStatus zs_nls_field(const struct ZsNls *handle, double *re, double *im, size_t len);

/**
 * # Safety
 * `handle` must be null or a handle from this library, freed at most once.
 */
void zs_nls_free(struct ZsNls *handle);

/**
 * Damped-wave multiplier at `(ξ, t)`, row-major into `out[4]`.
 */
enum ZsStatus zs_semigroup_multiplier(double alpha, double xi, double t, double *out);

/**
 * Fourier-side kernel `K₁(ξ, η)` of the stationary driver.
 */
enum ZsStatus zs_kernel_k1(double alpha, double xi, double eta, double *out);

/**
 * Physical-space kernel `k(x, y)` for the config's noise.
 */
enum ZsStatus zs_kernel_k(const struct ZsConfig *config, double x, double y, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ZAKHAROV_SDE_H */
