#ifndef CHAOSWAVE_H
#define CHAOSWAVE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CwStatus {
  CW_STATUS_OK = 0,
  CW_STATUS_INVALID_ARGUMENT = 1,
  CW_STATUS_DOMAIN = 2,
  CW_STATUS_UNDEFINED_METRIC = 3,
  CW_STATUS_PARSE = 4,
  CW_STATUS_IO = 5,
  CW_STATUS_NULL_POINTER = 6,
  CW_STATUS_BUFFER_TOO_SMALL = 7,
  CW_STATUS_PANIC = 8,
} CwStatus;

/**
 * Closed billiard boundary.
 */
typedef struct CwBoundary CwBoundary;

/**
 * Correlation grid, row-major with rows along r_y.
 */
typedef struct CwGrid CwGrid;

/**
 * Image group (wedge or corridor) with its frame.
 */
typedef struct CwImageSet CwImageSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`) and returns the full message length plus one. Returns
 * 0 if no error has been recorded.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t cw_last_error_message(char *buf, size_t len);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum CwStatus cw_bessel_j0(double x, double *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum CwStatus cw_bessel_y0(double x, double *out);

/**
 * Dihedral group of the wedge of opening π/n with edges at `−frame_angle`
 * and `π/n − frame_angle`; n = 3 with `frame_angle = π/6` gives edges at ±30°.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum CwStatus cw_wedge_group(uint32_t n, double frame_angle, struct CwImageSet **out);

/**
 * Corridor images `{x ≥ 0, |y − center_y| ≤ width/2}` within `cutoff`
 * of the probe.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum CwStatus cw_corridor_images(double width,
                                 double center_y,
                                 double probe_x,
                                 double probe_y,
                                 double cutoff,
                                 struct CwImageSet **out);

/**
 * # Safety
 * `set` must be a live handle; `out` valid for writes.
 */
enum CwStatus cw_image_set_len(const struct CwImageSet *set, size_t *out);

/**
 * # Safety
 * `set` must be null or a handle not yet freed.
 */
void cw_image_set_free(struct CwImageSet *set);

/**
 * `C(x, y)` from the signed Bessel sum.
 *
 * # Safety
 * `set` must be a live handle; `out` valid for writes.
 */
enum CwStatus cw_theory_value(const struct CwImageSet *set,
                              double k,
                              double x_x,
                              double x_y,
                              double y_x,
                              double y_y,
                              double *out);

/**
 * # Safety
 * `set` must be a live handle; `out` valid for writes.
 */
enum CwStatus cw_theory_grid(const struct CwImageSet *set,
                             double k,
                             double probe_x,
                             double probe_y,
                             double side,
                             size_t resolution,
                             struct CwGrid **out);

/**
 * Random-wave ensemble estimate of the adapted correlation.
 *
 * # Safety
 * `set` must be a live handle; `out` valid for writes.
 */
enum CwStatus cw_ensemble_grid(const struct CwImageSet *set,
                               double k,
                               size_t waves_per_member,
                               size_t members,
                               uint64_t seed,
                               double probe_x,
                               double probe_y,
                               double side,
                               size_t resolution,
                               struct CwGrid **out);

/**
 * # Safety
 * `grid` must be a live handle; `out` valid for writes.
 */
enum CwStatus cw_grid_resolution(const struct CwGrid *grid, size_t *out);

/**
 * Copies the `resolution²` values into `buf`.
 *
 * # Safety
 * `grid` must be a live handle; `buf` valid for `len` writes.
 */
enum CwStatus cw_grid_values(const struct CwGrid *grid, double *buf, size_t len);

/**
 * # Safety
 * `grid` must be null or a handle not yet freed.
 */
void cw_grid_free(struct CwGrid *grid);

/**
 * Relative squared error of `numerical` against `theory`.
 *
 * # Safety
 * Both grids must be live handles; `out` valid for writes.
 */
enum CwStatus cw_error_metric(const struct CwGrid *numerical,
                              const struct CwGrid *theory,
                              double *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum CwStatus cw_boundary_cone(double diameter, struct CwBoundary **out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum CwStatus cw_boundary_quarter_stadium(double radius, double straight, struct CwBoundary **out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum CwStatus cw_boundary_circle(double radius, struct CwBoundary **out);

/**
 * # Safety
 * `boundary` must be a live handle; `out` valid for writes.
 */
enum CwStatus cw_boundary_length(const struct CwBoundary *boundary, double *out);

/**
 * # Safety
 * `boundary` must be null or a handle not yet freed.
 */
void cw_boundary_free(struct CwBoundary *boundary);

/**
 * Eigen-wavenumbers in `[k_min, k_max]`. The number found is written to
 * `count`; if it exceeds `capacity`, the first `capacity` are copied and
 * `CW_STATUS_BUFFER_TOO_SMALL` is returned.
 *
 * # Safety
 * `boundary` must be a live handle; `buf` valid for `capacity` writes;
 * `count` valid for writes.
 */
enum CwStatus cw_eigen_scan(const struct CwBoundary *boundary,
                            double k_min,
                            double k_max,
                            double dk,
                            double *buf,
                            size_t capacity,
                            size_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHAOSWAVE_H */
