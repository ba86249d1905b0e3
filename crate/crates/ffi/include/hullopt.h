#ifndef HULLOPT_H
#define HULLOPT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes. Values 2 to 4 match the command-line exit codes.
 */
typedef enum HulloptStatus {
  HULLOPT_STATUS_OK = 0,
  HULLOPT_STATUS_NULL_POINTER = 1,
  HULLOPT_STATUS_VALIDATION = 2,
  HULLOPT_STATUS_IO = 3,
  HULLOPT_STATUS_NUMERICAL = 4,
  HULLOPT_STATUS_INVALID_STRING = 5,
  HULLOPT_STATUS_PANIC = 6,
} HulloptStatus;

/*
 A hull: normalized offsets plus principal dimensions.
 */
typedef struct HulloptHull HulloptHull;

/*
 A trained surrogate network.
 */
typedef struct HulloptModel HulloptModel;

/*
 A fitted principal-component hull model.
 */
typedef struct HulloptPca HulloptPca;

typedef struct HulloptHydrostatics {
  double displaced_volume;
  double wetted_surface;
  double midship_area;
  double block_coefficient;
  double prismatic_coefficient;
  double slenderness;
} HulloptHydrostatics;

typedef struct HulloptResistance {
  double froude;
  double speed;
  double reynolds;
  double frictional;
  double wave;
  double total;
  double merit_coefficient;
} HulloptResistance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread. The pointer stays valid
 until the next failing call on the same thread.
 */
const char *hullopt_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *hullopt_version(void);

/*
 ITTC-1957 friction coefficient at Reynolds number `reynolds`.

 # Safety
 `out` must be a valid pointer to writable memory.
 */
enum HulloptStatus hullopt_friction_coefficient(double reynolds, double *out);

/*
 Build a hull from `n_stations * n_waterlines` normalized half-breadths,
 station-major, on equispaced stations (aft to fore) and waterlines
 (keel to waterline).

 # Safety
 `offsets` must point to `n_stations * n_waterlines` values and `out` must
 be writable. Release the handle with [`hullopt_hull_free`].
 */
enum HulloptStatus hullopt_hull_new(const double *offsets,
                                    uintptr_t n_stations,
                                    uintptr_t n_waterlines,
                                    double length,
                                    double length_to_beam,
                                    double beam_to_draft,
                                    struct HulloptHull **out);

/*
 # Safety
 `hull` must come from this library and not be used afterwards.
 */
void hullopt_hull_free(struct HulloptHull *hull);

/*
 # Safety
 `hull` must be a live handle and `out` writable.
 */
enum HulloptStatus hullopt_hull_hydrostatics(const struct HulloptHull *hull,
                                             struct HulloptHydrostatics *out);

/*
 Calm-water resistance at Froude number `froude` with default fluid and
 quadrature settings.

 # Safety
 `hull` must be a live handle and `out` writable.
 */
enum HulloptStatus hullopt_hull_evaluate(const struct HulloptHull *hull,
                                         double froude,
                                         struct HulloptResistance *out);

/*
 # Safety
 `path` must be a NUL-terminated string and `out` writable. Release the
 handle with [`hullopt_pca_free`].
 */
enum HulloptStatus hullopt_pca_load(const char *path, struct HulloptPca **out);

/*
 # Safety
 `pca` must come from this library and not be used afterwards.
 */
void hullopt_pca_free(struct HulloptPca *pca);

/*
 Number of retained axes, or 0 for a null handle.

 # Safety
 `pca` must be null or a live handle.
 */
uintptr_t hullopt_pca_n_axes(const struct HulloptPca *pca);

/*
 Hull for the design vector `params` (scaled scores, then L/B and B/T;
 `n_axes + 2` values) at length `length`.

 # Safety
 `pca` must be a live handle, `params` must point to `n_params` values and
 `out` must be writable. Release the result with [`hullopt_hull_free`].
 */
enum HulloptStatus hullopt_pca_hull(const struct HulloptPca *pca,
                                    const double *params,
                                    uintptr_t n_params,
                                    double length,
                                    struct HulloptHull **out);

/*
 # Safety
 `path` must be a NUL-terminated string and `out` writable. Release the
 handle with [`hullopt_model_free`].
 */
enum HulloptStatus hullopt_model_load(const char *path, struct HulloptModel **out);

/*
 # Safety
 `model` must come from this library and not be used afterwards.
 */
void hullopt_model_free(struct HulloptModel *model);

/*
 Surrogate merit coefficient for the design vector `params` at length
 `length` and Froude number `froude`. `out_of_range` (may be null) is set
 to 1 when the inputs lie outside the training range.

 # Safety
 `model` must be a live handle, `params` must point to `n_params` values
 and `out` must be writable.
 */
enum HulloptStatus hullopt_model_predict(const struct HulloptModel *model,
                                         const double *params,
                                         uintptr_t n_params,
                                         double length,
                                         double froude,
                                         double *out,
                                         int32_t *out_of_range);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HULLOPT_H */
