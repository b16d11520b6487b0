#ifndef D3PINN_H
#define D3PINN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

enum D3pinnStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  D3PINN_STATUS_OK = 0,
  D3PINN_STATUS_NULL_POINTER = 1,
  D3PINN_STATUS_INVALID_ARGUMENT = 2,
  D3PINN_STATUS_CONFIG = 3,
  D3PINN_STATUS_IO = 4,
  D3PINN_STATUS_FORMAT = 5,
  D3PINN_STATUS_TRAINING_HALTED = 6,
  D3PINN_STATUS_INTEGRATION_HALTED = 7,
  D3PINN_STATUS_DOMAIN = 8,
  D3PINN_STATUS_NON_FINITE = 9,
  D3PINN_STATUS_GRID_MISMATCH = 10,
  D3PINN_STATUS_BUFFER_TOO_SMALL = 11,
  D3PINN_STATUS_PANIC = 12,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum D3pinnStatus D3pinnStatus;
#else
typedef int32_t D3pinnStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/*
 A resolved run configuration.
 */
typedef struct D3pinnConfig D3pinnConfig;

/*
 A solution on a space-time grid.
 */
typedef struct D3pinnField D3pinnField;

/*
 Trained subdomain networks.
 */
typedef struct D3pinnModel D3pinnModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the calling thread's last error message into `buf` (NUL
 terminated, truncated to fit) and returns the full message length in
 bytes. Pass a null `buf` to query the length.

 # Safety
 `buf` must be null or point to `len` writable bytes.
 */
size_t d3pinn_last_error(char *buf, size_t len);

/*
 Library version as a static NUL-terminated string.
 */
const char *d3pinn_version(void);

/*
 Built-in configuration; `problem` is `example1` or `example2`, `scale`
 is `desk` or `full`.

 # Safety
 String arguments must be null or NUL-terminated; `out` must be writable.
 */
D3pinnStatus d3pinn_config_preset(const char *problem,
                                  const char *scale,
                                  struct D3pinnConfig **out);

/*
 Parses a TOML configuration document.

 # Safety
 `toml` must be null or NUL-terminated; `out` must be writable.
 */
D3pinnStatus d3pinn_config_from_toml(const char *toml, struct D3pinnConfig **out);

/*
 Writes the resolved configuration as TOML into `buf` like
 [`d3pinn_last_error`]; `written` receives the full length.

 # Safety
 `cfg` must come from this library; `buf` must be null or hold `len`
 bytes; `written` must be writable.
 */
D3pinnStatus d3pinn_config_to_toml(const struct D3pinnConfig *cfg,
                                   char *buf,
                                   size_t len,
                                   size_t *written);

/*
 # Safety
 `cfg` must come from this library.
 */
D3pinnStatus d3pinn_config_set_seed(struct D3pinnConfig *cfg, uint64_t seed);

/*
 # Safety
 `cfg` must come from this library.
 */
D3pinnStatus d3pinn_config_set_iterations(struct D3pinnConfig *cfg, size_t iterations);

/*
 `variant` is `xpinn`, `ddpinn` or `d3pinn`.

 # Safety
 `cfg` must come from this library; `variant` must be null or
 NUL-terminated.
 */
D3pinnStatus d3pinn_config_set_variant(struct D3pinnConfig *cfg, const char *variant);

/*
 # Safety
 `cfg` must be null or come from this library, and is invalid afterwards.
 */
void d3pinn_config_free(struct D3pinnConfig *cfg);

/*
 Stage 1: trains the configured networks.

 # Safety
 `cfg` must come from this library; `out` must be writable.
 */
D3pinnStatus d3pinn_train(const struct D3pinnConfig *cfg, struct D3pinnModel **out);

/*
 # Safety
 `path` must be null or NUL-terminated; `out` must be writable.
 */
D3pinnStatus d3pinn_model_load(const char *path, struct D3pinnModel **out);

/*
 # Safety
 `model` must come from this library; `path` must be null or
 NUL-terminated.
 */
D3pinnStatus d3pinn_model_save(const struct D3pinnModel *model, const char *path);

/*
 Total loss at the trained parameters.

 # Safety
 `model` must come from this library; `loss` must be writable.
 */
D3pinnStatus d3pinn_model_final_loss(const struct D3pinnModel *model, double *loss);

/*
 # Safety
 `model` must be null or come from this library, and is invalid
 afterwards.
 */
void d3pinn_model_free(struct D3pinnModel *model);

/*
 Stage 2: evolves the frozen-operator ODE on the configured grid.

 # Safety
 `cfg` and `model` must come from this library; `out` must be writable.
 */
D3pinnStatus d3pinn_evolve(const struct D3pinnConfig *cfg,
                           const struct D3pinnModel *model,
                           struct D3pinnField **out);

/*
 The configured problem's reference solution on its evaluation grid.

 # Safety
 `cfg` must come from this library; `out` must be writable.
 */
D3pinnStatus d3pinn_reference(const struct D3pinnConfig *cfg, struct D3pinnField **out);

/*
 # Safety
 `field` must come from this library; `nx` and `nt` must be writable.
 */
D3pinnStatus d3pinn_field_dims(const struct D3pinnField *field, size_t *nx, size_t *nt);

/*
 Copies the values row-major (`buf[i * nt + j] = u(x_i, t_j)`).

 # Safety
 `field` must come from this library; `buf` must hold `len` doubles.
 */
D3pinnStatus d3pinn_field_values(const struct D3pinnField *field, double *buf, size_t len);

/*
 Copies the x grid (`which = 0`) or t grid (`which = 1`).

 # Safety
 `field` must come from this library; `buf` must hold `len` doubles.
 */
D3pinnStatus d3pinn_field_axis(const struct D3pinnField *field,
                               int32_t which,
                               double *buf,
                               size_t len);

/*
 # Safety
 `field` must come from this library; `path` must be null or
 NUL-terminated.
 */
D3pinnStatus d3pinn_field_save(const struct D3pinnField *field, const char *path);

/*
 # Safety
 `path` must be null or NUL-terminated; `out` must be writable.
 */
D3pinnStatus d3pinn_field_load(const char *path, struct D3pinnField **out);

/*
 # Safety
 `field` must be null or come from this library, and is invalid
 afterwards.
 */
void d3pinn_field_free(struct D3pinnField *field);

/*
 Relative L1 and L2 errors and the largest absolute error of `approx`
 against `reference` on identical grids. Any output pointer may be null.

 # Safety
 Fields must come from this library; non-null outputs must be writable.
 */
D3pinnStatus d3pinn_relative_errors(const struct D3pinnField *approx,
                                    const struct D3pinnField *reference,
                                    double *rel_l1,
                                    double *rel_l2,
                                    double *max_abs);

/*
 Runs every stage into directory `out_dir`, writing all artifacts.
 `passed` receives 1 when the relative L2 error meets the configured
 threshold and 0 otherwise; either output may be null.

 # Safety
 `cfg` must come from this library; `out_dir` must be null or
 NUL-terminated; non-null outputs must be writable.
 */
D3pinnStatus d3pinn_run_experiment(const struct D3pinnConfig *cfg,
                                   const char *out_dir,
                                   double *rel_l2,
                                   int32_t *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* D3PINN_H */
