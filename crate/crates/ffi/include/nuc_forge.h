#ifndef NUC_FORGE_H
#define NUC_FORGE_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Dither along a row: the shifted exposure sees the scene one column over.
 */
#define NF_AXIS_HORIZONTAL 0

/*
 Dither along a column.
 */
#define NF_AXIS_VERTICAL 1

/*
 Result code of every fallible call.
 */
typedef enum NfStatus {
  NF_STATUS_OK = 0,
  NF_STATUS_NULL_POINTER = 1,
  NF_STATUS_INVALID_ARGUMENT = 2,
  NF_STATUS_DIMENSION_MISMATCH = 3,
  NF_STATUS_IO = 4,
  NF_STATUS_PARSE = 5,
  NF_STATUS_NUMERICAL = 6,
  NF_STATUS_PANIC = 7,
} NfStatus;

/*
 Accumulates dither pairs and reconstructs the offset map from them.
 */
typedef struct NfEstimator NfEstimator;

/*
 A frame of 64-bit samples, row-major.
 */
typedef struct NfFrame NfFrame;

/*
 A gain-compensated offset map with zero mean.
 */
typedef struct NfOffset NfOffset;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *nf_version(void);

/*
 Message of the last failed call on this thread, or NULL. The pointer stays
 valid until the next failing call on the same thread.
 */
const char *nf_last_error(void);

/*
 Copies `height * width` row-major samples into a new frame.

 # Safety
 `data` must point to `len` readable doubles and `out` must be writable.
 */
enum NfStatus nf_frame_new(size_t height,
                           size_t width,
                           const double *data,
                           size_t len,
                           struct NfFrame **out);

/*
 Reads a `.pfm` or `.pgm` file.

 # Safety
 `path` must be a NUL-terminated string and `out` writable.
 */
enum NfStatus nf_frame_read(const char *path, struct NfFrame **out);

/*
 Writes the frame as little-endian single-precision PFM.

 # Safety
 `frame` must be a live handle and `path` a NUL-terminated string.
 */
enum NfStatus nf_frame_write_pfm(const struct NfFrame *frame, const char *path);

/*
 # Safety
 `frame` must be a live handle; `height` and `width` must be writable.
 */
enum NfStatus nf_frame_dims(const struct NfFrame *frame, size_t *height, size_t *width);

/*
 Copies the samples into `dst`, which must hold exactly `height * width` values.

 # Safety
 `frame` must be a live handle and `dst` must point to `len` writable doubles.
 */
enum NfStatus nf_frame_copy(const struct NfFrame *frame, double *dst, size_t len);

/*
 # Safety
 `frame` must be NULL or a handle not yet freed.
 */
void nf_frame_free(struct NfFrame *frame);

/*
 # Safety
 `offset` must be a live handle; `height` and `width` must be writable.
 */
enum NfStatus nf_offset_dims(const struct NfOffset *offset, size_t *height, size_t *width);

/*
 # Safety
 `offset` must be a live handle and `dst` must point to `len` writable doubles.
 */
enum NfStatus nf_offset_copy(const struct NfOffset *offset, double *dst, size_t len);

/*
 # Safety
 `offset` must be a live handle and `path` a NUL-terminated string.
 */
enum NfStatus nf_offset_write_pfm(const struct NfOffset *offset, const char *path);

/*
 # Safety
 `offset` must be NULL or a handle not yet freed.
 */
void nf_offset_free(struct NfOffset *offset);

/*
 Integrates a gradient field into a zero-mean offset map.

 `dx` holds `height * (width - 1)` horizontal differences and `dy` holds
 `(height - 1) * width` vertical differences, both row-major.
 `residual_rms` may be NULL.

 # Safety
 The buffers must hold `dx_len` and `dy_len` readable doubles; `out` must be
 writable.
 */
enum NfStatus nf_reconstruct(size_t height,
                             size_t width,
                             const double *dx,
                             size_t dx_len,
                             const double *dy,
                             size_t dy_len,
                             struct NfOffset **out,
                             double *residual_rms);

/*
 New estimator for frames of the given size.

 # Safety
 `out` must be writable.
 */
enum NfStatus nf_estimator_new(size_t height, size_t width, struct NfEstimator **out);

/*
 Records one dither cycle: `base` at the rest position and `shifted` one
 pixel along `axis` (`NF_AXIS_HORIZONTAL` or `NF_AXIS_VERTICAL`).

 # Safety
 All handles must be live.
 */
enum NfStatus nf_estimator_add_pair(struct NfEstimator *estimator,
                                    const struct NfFrame *base,
                                    const struct NfFrame *shifted,
                                    uint32_t axis);

/*
 Number of recorded cycles per axis.

 # Safety
 `estimator` must be live; `horizontal` and `vertical` must be writable.
 */
enum NfStatus nf_estimator_cycles(const struct NfEstimator *estimator,
                                  size_t *horizontal,
                                  size_t *vertical);

/*
 Median-aggregates the recorded cycles and reconstructs the offset map.
 Needs at least one cycle per axis. `residual_rms` may be NULL.

 # Safety
 `estimator` must be live and `out` writable.
 */
enum NfStatus nf_estimator_reconstruct(const struct NfEstimator *estimator,
                                       struct NfOffset **out,
                                       double *residual_rms);

/*
 # Safety
 `estimator` must be NULL or a handle not yet freed.
 */
void nf_estimator_free(struct NfEstimator *estimator);

/*
 Subtracts the offset map from a gain-compensated frame.

 # Safety
 Handles must be live and `out` writable.
 */
enum NfStatus nf_correct(const struct NfFrame *frame,
                         const struct NfOffset *offset,
                         struct NfFrame **out);

/*
 Runs one seeded simulation described by a JSON configuration (same format
 as the command line). `estimate` may be NULL; otherwise it receives the
 estimated offset map.

 # Safety
 `config_json` must be a NUL-terminated string; the error outputs must be
 writable.
 */
enum NfStatus nf_run_experiment(const char *config_json,
                                double *normalized_error,
                                double *corrupted_error,
                                struct NfOffset **estimate);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NUC_FORGE_H */
