#ifndef LENSCAL_H
#define LENSCAL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Distortion model selector.
 */
typedef enum {
  /**
   * f(r) = 1 + k1 r^2 + k2 r^4
   */
  LENSCAL_MODEL_KIND_EVEN_POLY2 = 0,
  /**
   * f(r) = 1 + k1 r^2
   */
  LENSCAL_MODEL_KIND_EVEN_POLY1 = 1,
  /**
   * f(r) = 1 + k1 r + k2 r^2, exact closed-form inverse
   */
  LENSCAL_MODEL_KIND_QUAD_CUBIC = 2,
  /**
   * r = r_d (1 + k1 r_d + k2 r_d^2), fitted in the distorted domain
   */
  LENSCAL_MODEL_KIND_DISTORTED_TO_UNDISTORTED = 3,
} LenscalModelKind;

/**
 * Status codes shared by every fallible entry point.
 */
typedef enum {
  LENSCAL_STATUS_OK = 0,
  LENSCAL_STATUS_NULL_POINTER = 1,
  LENSCAL_STATUS_INVALID_ARGUMENT = 2,
  LENSCAL_STATUS_OUT_OF_RANGE = 3,
  LENSCAL_STATUS_NO_CONVERGENCE = 4,
  LENSCAL_STATUS_UNSUPPORTED = 5,
  LENSCAL_STATUS_IO = 6,
  LENSCAL_STATUS_CALIBRATION_FAILED = 7,
} LenscalStatus;

/**
 * Opaque calibration result handle.
 */
typedef struct LenscalCalibration LenscalCalibration;

/**
 * Opaque camera intrinsics handle.
 */
typedef struct LenscalIntrinsics LenscalIntrinsics;

/**
 * Opaque distortion model handle.
 */
typedef struct LenscalModel LenscalModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Build a distortion model. Returns null when the coefficients are not
 * finite. `k2` is ignored by the single-coefficient model.
 */
LenscalModel *lenscal_model_new(LenscalModelKind kind, double k1, double k2);

/**
 * Release a model handle. Accepts null.
 */
void lenscal_model_free(LenscalModel *model);

/**
 * Build a pinhole intrinsics handle. Returns null when alpha or beta is not
 * a positive finite number.
 */
LenscalIntrinsics *lenscal_intrinsics_new(double alpha,
                                          double beta,
                                          double gamma,
                                          double u0,
                                          double v0);

/**
 * Release an intrinsics handle. Accepts null.
 */
void lenscal_intrinsics_free(LenscalIntrinsics *intr);

/**
 * Forward map: undistorted radius to distorted radius.
 */
LenscalStatus lenscal_distort_radius(const LenscalModel *model, double r, double *out_rd);

/**
 * Inverse map: distorted radius back to undistorted radius. Uses the exact
 * cubic solution where the model admits one.
 */
LenscalStatus lenscal_undistort_radius(const LenscalModel *model, double rd, double *out_r);

/**
 * Distort an ideal pixel observation.
 */
LenscalStatus lenscal_distort_pixel(const LenscalModel *model,
                                    const LenscalIntrinsics *intr,
                                    double u,
                                    double v,
                                    double *out_u,
                                    double *out_v);

/**
 * Undistort an observed pixel.
 */
LenscalStatus lenscal_undistort_pixel(const LenscalModel *model,
                                      const LenscalIntrinsics *intr,
                                      double u,
                                      double v,
                                      double *out_u,
                                      double *out_v);

/**
 * Monotone validity range of the radial map. `r_max` or `rd_max` may be
 * infinity when the map never turns over.
 */
LenscalStatus lenscal_valid_radius_range(const LenscalModel *model,
                                         double *out_r_max,
                                         double *out_rd_max);

/**
 * Run the full calibration pipeline on a dataset file (JSON, format
 * version 1) and return an opaque result handle through `out`.
 */
LenscalStatus lenscal_calibrate_file(const char *path,
                                     LenscalModelKind kind,
                                     LenscalCalibration **out);

/**
 * Release a calibration result handle. Accepts null.
 */
void lenscal_calibration_free(LenscalCalibration *cal);

/**
 * Copy the five intrinsic parameters out of a calibration result.
 */
LenscalStatus lenscal_calibration_intrinsics(const LenscalCalibration *cal,
                                             double *out_alpha,
                                             double *out_beta,
                                             double *out_gamma,
                                             double *out_u0,
                                             double *out_v0);

/**
 * Copy the fitted distortion coefficients. `out_has_k2` is 0 for the
 * single-coefficient model, in which case `out_k2` is set to 0.
 */
LenscalStatus lenscal_calibration_distortion(const LenscalCalibration *cal,
                                             double *out_k1,
                                             double *out_k2,
                                             int32_t *out_has_k2);

/**
 * Final value of the reprojection objective J.
 */
LenscalStatus lenscal_calibration_final_j(const LenscalCalibration *cal, double *out_j);

/**
 * Number of accepted refinement iterations.
 */
LenscalStatus lenscal_calibration_iterations(const LenscalCalibration *cal, size_t *out_iters);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LENSCAL_H */
