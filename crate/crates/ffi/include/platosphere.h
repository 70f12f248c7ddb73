#ifndef PLATOSPHERE_H
#define PLATOSPHERE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum PsStatus {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_POINTER = 1,
  PS_STATUS_INVALID_ARGUMENT = 2,
  PS_STATUS_UNSUPPORTED = 3,
  PS_STATUS_SHAPE_MISMATCH = 4,
  PS_STATUS_BUFFER_TOO_SMALL = 5,
  PS_STATUS_VERIFICATION_FAILED = 6,
  PS_STATUS_IO = 7,
  PS_STATUS_INTERNAL = 8,
} PsStatus;

/**
 * A solid with one face tiling, padding plans and field actions.
 */
typedef struct PsGrid PsGrid;

/**
 * A network bound to a solid and input width.
 */
typedef struct PsNetwork PsNetwork;

/**
 * Symmetry group of a solid.
 */
typedef struct PsSymmetry PsSymmetry;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Length in bytes of the last error message on this thread, excluding the terminator.
 */
size_t ps_last_error_length(void);

/**
 * Copies the last error message into `buf` (NUL-terminated, truncated to `len - 1`
 * bytes). Returns the full message length.
 *
 * # Safety
 * `buf` must point to `len` writable bytes or be null with `len == 0`.
 */
size_t ps_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ps_version(void);

/**
 * Builds the symmetry group of `solid` ("tetrahedron", "cube", "octahedron",
 * "icosahedron") with `flavor` ("chiral" or "full").
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be writable.
 */
enum PsStatus ps_symmetry_new(const char *solid, const char *flavor, struct PsSymmetry **out);

/**
 * # Safety
 * `h` must come from [`ps_symmetry_new`] and not be used afterwards.
 */
void ps_symmetry_free(struct PsSymmetry *h);

/**
 * Group order, number of faces and number of flags (regular-action degree).
 *
 * # Safety
 * `h` must be a live handle; output pointers must be writable.
 */
enum PsStatus ps_symmetry_counts(const struct PsSymmetry *h,
                                 size_t *order,
                                 size_t *faces,
                                 size_t *flags);

/**
 * Number of generators of the group.
 *
 * # Safety
 * `h` must be a live handle; `out` must be writable.
 */
enum PsStatus ps_symmetry_num_generators(const struct PsSymmetry *h, size_t *out);

/**
 * Writes the flag permutation of generator `index` (`out[i]` = image of flag `i`).
 *
 * # Safety
 * `h` must be a live handle; `out` must hold `len` values.
 */
enum PsStatus ps_symmetry_generator_flags(const struct PsSymmetry *h,
                                          size_t index,
                                          size_t *out,
                                          size_t len);

/**
 * Builds a sphere grid of the given face `width`.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be writable.
 */
enum PsStatus ps_grid_new(const char *solid, const char *flavor, size_t width, struct PsGrid **out);

/**
 * # Safety
 * `h` must come from [`ps_grid_new`] and not be used afterwards.
 */
void ps_grid_free(struct PsGrid *h);

/**
 * Number of `double`s in a field with `channels` channels.
 *
 * # Safety
 * `h` must be a live handle; `out` must be writable.
 */
enum PsStatus ps_grid_field_len(const struct PsGrid *h,
                                bool regular,
                                size_t channels,
                                bool padded,
                                size_t *out);

/**
 * Equivariant padding; `out` receives the padded field.
 *
 * # Safety
 * `input` must hold `in_len` values and `out` `out_len` values.
 */
enum PsStatus ps_grid_pad(const struct PsGrid *h,
                          bool regular,
                          size_t channels,
                          const double *input,
                          size_t in_len,
                          double *out,
                          size_t out_len);

/**
 * Applies solid generator `index` to an unpadded field.
 *
 * # Safety
 * `input` must hold `in_len` values and `out` `out_len` values.
 */
enum PsStatus ps_grid_transform(const struct PsGrid *h,
                                bool regular,
                                size_t channels,
                                size_t index,
                                const double *input,
                                size_t in_len,
                                double *out,
                                size_t out_len);

/**
 * Pixel centers as `x, y, z` triples ordered by face then pixel. `written`
 * receives the number of doubles (3 per pixel).
 *
 * # Safety
 * `solid` must be NUL-terminated; `out` must hold `len` values.
 */
enum PsStatus ps_pixel_centers(const char *solid,
                               size_t width,
                               double *out,
                               size_t len,
                               size_t *written);

/**
 * Classification network with `channels` base channels, global fraction
 * `fraction` and `classes` outputs, on a scalar input of one channel.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be writable.
 */
enum PsStatus ps_network_classifier_new(const char *solid,
                                        const char *flavor,
                                        size_t width,
                                        size_t channels,
                                        double fraction,
                                        size_t classes,
                                        struct PsNetwork **out);

/**
 * Network from a JSON spec.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be writable.
 */
enum PsStatus ps_network_from_json(const char *spec_json,
                                   const char *solid,
                                   const char *flavor,
                                   size_t width,
                                   struct PsNetwork **out);

/**
 * # Safety
 * `h` must come from a network constructor and not be used afterwards.
 */
void ps_network_free(struct PsNetwork *h);

/**
 * Total weight count and input field length.
 *
 * # Safety
 * `h` must be a live handle; output pointers must be writable.
 */
enum PsStatus ps_network_sizes(const struct PsNetwork *h, size_t *num_params, size_t *input_len);

/**
 * Fills `out` with seeded random weights.
 *
 * # Safety
 * `out` must hold `len` values.
 */
enum PsStatus ps_network_random_weights(const struct PsNetwork *h,
                                        uint64_t seed,
                                        double *out,
                                        size_t len);

/**
 * Forward pass on a scalar input. `written` receives the output length
 * (class scores, or a flattened field).
 *
 * # Safety
 * Pointer/length pairs must describe valid buffers.
 */
enum PsStatus ps_network_forward(const struct PsNetwork *h,
                                 const double *weights,
                                 size_t weights_len,
                                 const double *input,
                                 size_t input_len,
                                 double *out,
                                 size_t out_len,
                                 size_t *written);

/**
 * Parameter counts of the gauge, hierarchy and main models, in that order.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must hold 3 values.
 */
enum PsStatus ps_compare_models(const char *solid,
                                const char *flavor,
                                size_t width,
                                bool regular,
                                size_t *out);

/**
 * Assembles `trials` random maps of `model` ("gauge", "hierarchy", "main")
 * and checks commutation with the model's generators at `tol`.
 * Returns [`PsStatus::VerificationFailed`] when any check fails; `max_diff`
 * is written either way.
 *
 * # Safety
 * String arguments must be NUL-terminated; `max_diff` must be writable.
 */
enum PsStatus ps_verify_equivariance(const char *solid,
                                     const char *flavor,
                                     const char *model,
                                     size_t width,
                                     bool regular,
                                     size_t trials,
                                     uint64_t seed,
                                     double tol,
                                     double *max_diff);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLATOSPHERE_H */
