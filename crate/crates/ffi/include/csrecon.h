#ifndef CSRECON_H
#define CSRECON_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CsStatus {
  CS_STATUS_OK = 0,
  CS_STATUS_NULL_POINTER = 1,
  CS_STATUS_DIMENSION = 2,
  CS_STATUS_RANGE = 3,
  CS_STATUS_INVALID_INPUT = 4,
  CS_STATUS_OVERFLOW = 5,
  CS_STATUS_CONDITIONING = 6,
  CS_STATUS_SCALE = 7,
  CS_STATUS_FORMAT = 8,
  CS_STATUS_IO = 9,
  /**
   * The library panicked; the handle arguments should be considered lost.
   */
  CS_STATUS_INTERNAL = 10,
} CsStatus;

/**
 * How a frame is turned into the image PSNR is computed on.
 */
typedef enum CsDomain {
  /**
   * RF lines: envelope detection and log compression.
   */
  CS_DOMAIN_BMODE = 0,
  /**
   * Already display-ready data: min-max rescale only.
   */
  CS_DOMAIN_RAW_RESCALED = 1,
} CsDomain;

/**
 * RF frame, `depth x lines`.
 */
typedef struct CsFrame CsFrame;

/**
 * Display image with values in `[0, 1]`.
 */
typedef struct CsImage CsImage;

/**
 * Sensed frame together with the operator that produced it.
 */
typedef struct CsMeasurements CsMeasurements;

/**
 * Gaussian sensing matrix, `N x M`.
 */
typedef struct CsOperator CsOperator;

/**
 * Solver selection for [`cs_recover`]. Zero (or NaN for the floating
 * fields) means "use the default".
 */
typedef struct CsSolverOptions {
  /**
   * Solver id such as `"st-sbl"`, `"bsbl-bo"`, `"l1"`. NULL selects `st-sbl`.
   */
  const char *solver;
  size_t block_size;
  size_t col_block;
  double prune;
  double p;
  size_t k;
  size_t support_size;
  size_t max_iters;
  double tol;
  double noise_var;
} CsSolverOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on the calling thread. The pointer
 * stays valid until the next failing call on that thread.
 */
const char *cs_last_error(void);

/**
 * All-defaults solver options (ST-SBL, column groups of 1, blocks of 32).
 */
struct CsSolverOptions cs_solver_options_default(void);

/**
 * Synthetic RF phantom.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum CsStatus cs_phantom_new(size_t depth,
                             size_t lines,
                             size_t scatterers,
                             double pulse_cycles,
                             double center_freq,
                             uint64_t seed,
                             struct CsFrame **out);

/**
 * Frame from `depth * lines` column-major samples (copied).
 *
 * # Safety
 * `data` must point to `depth * lines` readable doubles; `out` must be valid.
 */
enum CsStatus cs_frame_from_data(const double *data,
                                 size_t depth,
                                 size_t lines,
                                 struct CsFrame **out);

/**
 * # Safety
 * `frame` must be a live handle; `depth` and `lines` must be valid pointers.
 */
enum CsStatus cs_frame_shape(const struct CsFrame *frame, size_t *depth, size_t *lines);

/**
 * Copies the samples (column-major) into `out`, which must hold exactly
 * `depth * lines` values.
 *
 * # Safety
 * `frame` must be a live handle and `out` must point to `len` writable doubles.
 */
enum CsStatus cs_frame_copy_data(const struct CsFrame *frame, double *out, size_t len);

/**
 * # Safety
 * `frame` must be NULL or a handle not yet freed.
 */
void cs_frame_free(struct CsFrame *frame);

/**
 * Seeded `n x m` Gaussian operator with N(0, 1/n) entries.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CsStatus cs_operator_gaussian(size_t n, size_t m, uint32_t seed, struct CsOperator **out);

/**
 * Operator for a sampling ratio given as `num/den` of the frame depth `m`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CsStatus cs_operator_for_ratio(uint64_t num,
                                    uint64_t den,
                                    size_t m,
                                    uint32_t seed,
                                    struct CsOperator **out);

/**
 * # Safety
 * `op` must be a live handle; `n` and `m` must be valid pointers.
 */
enum CsStatus cs_operator_shape(const struct CsOperator *op, size_t *n, size_t *m);

/**
 * # Safety
 * `op` must be NULL or a handle not yet freed.
 */
void cs_operator_free(struct CsOperator *op);

/**
 * Senses every line of `frame` with `op`.
 *
 * # Safety
 * `frame` and `op` must be live handles; `out` must be valid.
 */
enum CsStatus cs_sense(const struct CsFrame *frame,
                       const struct CsOperator *op,
                       enum CsDomain domain,
                       struct CsMeasurements **out);

/**
 * # Safety
 * `meas` must be a live handle; `n` and `lines` must be valid pointers.
 */
enum CsStatus cs_measurements_shape(const struct CsMeasurements *meas, size_t *n, size_t *lines);

/**
 * # Safety
 * `meas` must be NULL or a handle not yet freed.
 */
void cs_measurements_free(struct CsMeasurements *meas);

/**
 * Recovers the RF frame behind `meas`. `options` may be NULL for the
 * defaults. `reference` (may be NULL) supplies the true frame for the
 * oracle solvers `irls` and `ksparse`. `iterations` and `converged` may be
 * NULL.
 *
 * # Safety
 * Handles must be live, `options` NULL or valid, `out` valid.
 */
enum CsStatus cs_recover(const struct CsMeasurements *meas,
                         const struct CsSolverOptions *options,
                         const struct CsFrame *reference,
                         struct CsFrame **out,
                         size_t *iterations,
                         bool *converged);

/**
 * Display image of a frame: B-mode for RF data, plain rescale otherwise.
 *
 * # Safety
 * `frame` must be a live handle; `out` must be valid.
 */
enum CsStatus cs_display_image(const struct CsFrame *frame,
                               enum CsDomain domain,
                               struct CsImage **out);

/**
 * # Safety
 * `image` must be a live handle; `rows` and `cols` must be valid pointers.
 */
enum CsStatus cs_image_shape(const struct CsImage *image, size_t *rows, size_t *cols);

/**
 * # Safety
 * `image` must be a live handle and `out` must point to `len` writable doubles.
 */
enum CsStatus cs_image_copy_data(const struct CsImage *image, double *out, size_t len);

/**
 * # Safety
 * `image` must be NULL or a handle not yet freed.
 */
void cs_image_free(struct CsImage *image);

/**
 * PSNR in dB with peak 1. Identical images give `+INFINITY`.
 *
 * # Safety
 * Both handles must be live; `out` must be valid.
 */
enum CsStatus cs_psnr(const struct CsImage *estimate, const struct CsImage *reference, double *out);

/**
 * Runs the experiment described by `spec_toml` and returns the report CSV
 * (free it with [`cs_string_free`]). `threads = 0` uses every core;
 * `timing = false` writes zero runtimes. Relative input paths resolve
 * against the current directory.
 *
 * # Safety
 * `spec_toml` must be a NUL-terminated string; `out` must be valid.
 */
enum CsStatus cs_bench_run(const char *spec_toml, size_t threads, bool timing, char **out);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void cs_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CSRECON_H */
