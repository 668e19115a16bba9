//! C ABI surface for the lenscal calibration library.
//!
//! Every constructor returns an opaque handle that must be released with the
//! matching `_free` function. Fallible calls return [`LenscalStatus`] and
//! write results through out-pointers, which are left untouched on error.
//!
//! Safety contract, shared by every function here: handle and out-pointer
//! arguments must be null or valid for the access implied by their type, and
//! handles must not be used after the matching `_free`.
#![allow(clippy::missing_safety_doc)]

use lenscal::dataset::{load_dataset, DatasetError};
use lenscal::{
    calibrate, CameraIntrinsics, DistortionError, DistortionKind, DistortionModel, LmOptions,
    PipelineError, Point2,
};
use std::ffi::CStr;
use std::os::raw::c_char;

/// Status codes shared by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LenscalStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    NoConvergence = 4,
    Unsupported = 5,
    Io = 6,
    CalibrationFailed = 7,
}

/// Distortion model selector.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LenscalModelKind {
    /// f(r) = 1 + k1 r^2 + k2 r^4
    EvenPoly2 = 0,
    /// f(r) = 1 + k1 r^2
    EvenPoly1 = 1,
    /// f(r) = 1 + k1 r + k2 r^2, exact closed-form inverse
    QuadCubic = 2,
    /// r = r_d (1 + k1 r_d + k2 r_d^2), fitted in the distorted domain
    DistortedToUndistorted = 3,
}

impl LenscalModelKind {
    fn build(self, k1: f64, k2: f64) -> DistortionModel {
        match self {
            LenscalModelKind::EvenPoly2 => DistortionModel::EvenPoly2 { k1, k2 },
            LenscalModelKind::EvenPoly1 => DistortionModel::EvenPoly1 { k1 },
            LenscalModelKind::QuadCubic => DistortionModel::QuadCubic { k1, k2 },
            LenscalModelKind::DistortedToUndistorted => {
                DistortionModel::DistortedToUndistorted { k1, k2 }
            }
        }
    }
}

/// Opaque distortion model handle.
pub struct LenscalModel {
    inner: DistortionModel,
}

/// Opaque camera intrinsics handle.
pub struct LenscalIntrinsics {
    inner: CameraIntrinsics,
}

/// Opaque calibration result handle.
pub struct LenscalCalibration {
    intrinsics: CameraIntrinsics,
    k1: f64,
    k2: f64,
    has_k2: bool,
    final_j: f64,
    iterations: usize,
}

fn status_of(e: &DistortionError) -> LenscalStatus {
    match e {
        DistortionError::NegativeRadius(_) => LenscalStatus::InvalidArgument,
        DistortionError::OutOfRange { .. } => LenscalStatus::OutOfRange,
        DistortionError::NoConvergence => LenscalStatus::NoConvergence,
        DistortionError::AnalyticUnsupported => LenscalStatus::Unsupported,
    }
}

/// Build a distortion model. Returns null when the coefficients are not
/// finite. `k2` is ignored by the single-coefficient model.
#[no_mangle]
pub unsafe extern "C" fn lenscal_model_new(
    kind: LenscalModelKind,
    k1: f64,
    k2: f64,
) -> *mut LenscalModel {
    if !k1.is_finite() || !k2.is_finite() {
        return std::ptr::null_mut();
    }
    Box::into_raw(Box::new(LenscalModel {
        inner: kind.build(k1, k2),
    }))
}

/// Release a model handle. Accepts null.
#[no_mangle]
pub unsafe extern "C" fn lenscal_model_free(model: *mut LenscalModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Build a pinhole intrinsics handle. Returns null when alpha or beta is not
/// a positive finite number.
#[no_mangle]
pub unsafe extern "C" fn lenscal_intrinsics_new(
    alpha: f64,
    beta: f64,
    gamma: f64,
    u0: f64,
    v0: f64,
) -> *mut LenscalIntrinsics {
    match CameraIntrinsics::new(alpha, beta, gamma, u0, v0) {
        Ok(inner) => Box::into_raw(Box::new(LenscalIntrinsics { inner })),
        Err(_) => std::ptr::null_mut(),
    }
}

/// Release an intrinsics handle. Accepts null.
#[no_mangle]
pub unsafe extern "C" fn lenscal_intrinsics_free(intr: *mut LenscalIntrinsics) {
    if !intr.is_null() {
        drop(unsafe { Box::from_raw(intr) });
    }
}

/// Forward map: undistorted radius to distorted radius.
#[no_mangle]
pub unsafe extern "C" fn lenscal_distort_radius(
    model: *const LenscalModel,
    r: f64,
    out_rd: *mut f64,
) -> LenscalStatus {
    let (Some(model), Some(out)) = (unsafe { model.as_ref() }, unsafe { out_rd.as_mut() }) else {
        return LenscalStatus::NullPointer;
    };
    match model.inner.distort_radius(r) {
        Ok(rd) => {
            *out = rd;
            LenscalStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Inverse map: distorted radius back to undistorted radius. Uses the exact
/// cubic solution where the model admits one.
#[no_mangle]
pub unsafe extern "C" fn lenscal_undistort_radius(
    model: *const LenscalModel,
    rd: f64,
    out_r: *mut f64,
) -> LenscalStatus {
    let (Some(model), Some(out)) = (unsafe { model.as_ref() }, unsafe { out_r.as_mut() }) else {
        return LenscalStatus::NullPointer;
    };
    match model.inner.undistort_radius(rd) {
        Ok(r) => {
            *out = r;
            LenscalStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Distort an ideal pixel observation.
#[no_mangle]
pub unsafe extern "C" fn lenscal_distort_pixel(
    model: *const LenscalModel,
    intr: *const LenscalIntrinsics,
    u: f64,
    v: f64,
    out_u: *mut f64,
    out_v: *mut f64,
) -> LenscalStatus {
    let (Some(model), Some(intr)) = (unsafe { model.as_ref() }, unsafe { intr.as_ref() }) else {
        return LenscalStatus::NullPointer;
    };
    let (Some(ou), Some(ov)) = (unsafe { out_u.as_mut() }, unsafe { out_v.as_mut() }) else {
        return LenscalStatus::NullPointer;
    };
    match model.inner.distort_pixel(&intr.inner, Point2::new(u, v)) {
        Ok(q) => {
            *ou = q.x;
            *ov = q.y;
            LenscalStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Undistort an observed pixel.
#[no_mangle]
pub unsafe extern "C" fn lenscal_undistort_pixel(
    model: *const LenscalModel,
    intr: *const LenscalIntrinsics,
    u: f64,
    v: f64,
    out_u: *mut f64,
    out_v: *mut f64,
) -> LenscalStatus {
    let (Some(model), Some(intr)) = (unsafe { model.as_ref() }, unsafe { intr.as_ref() }) else {
        return LenscalStatus::NullPointer;
    };
    let (Some(ou), Some(ov)) = (unsafe { out_u.as_mut() }, unsafe { out_v.as_mut() }) else {
        return LenscalStatus::NullPointer;
    };
    match model.inner.undistort_pixel(&intr.inner, Point2::new(u, v)) {
        Ok(q) => {
            *ou = q.x;
            *ov = q.y;
            LenscalStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Monotone validity range of the radial map. `r_max` or `rd_max` may be
/// infinity when the map never turns over.
#[no_mangle]
pub unsafe extern "C" fn lenscal_valid_radius_range(
    model: *const LenscalModel,
    out_r_max: *mut f64,
    out_rd_max: *mut f64,
) -> LenscalStatus {
    let Some(model) = (unsafe { model.as_ref() }) else {
        return LenscalStatus::NullPointer;
    };
    let (Some(or), Some(ord)) = (unsafe { out_r_max.as_mut() }, unsafe { out_rd_max.as_mut() })
    else {
        return LenscalStatus::NullPointer;
    };
    let range = model.inner.valid_radius_range();
    *or = range.r_max;
    *ord = range.rd_max;
    LenscalStatus::Ok
}

/// Run the full calibration pipeline on a dataset file (JSON, format
/// version 1) and return an opaque result handle through `out`.
#[no_mangle]
pub unsafe extern "C" fn lenscal_calibrate_file(
    path: *const c_char,
    kind: LenscalModelKind,
    out: *mut *mut LenscalCalibration,
) -> LenscalStatus {
    if path.is_null() || out.is_null() {
        return LenscalStatus::NullPointer;
    }
    let Ok(path) = unsafe { CStr::from_ptr(path) }.to_str() else {
        return LenscalStatus::InvalidArgument;
    };
    let fit_kind = match kind {
        LenscalModelKind::EvenPoly2 => DistortionKind::EvenPoly2,
        LenscalModelKind::EvenPoly1 => DistortionKind::EvenPoly1,
        LenscalModelKind::QuadCubic => DistortionKind::QuadCubic,
        LenscalModelKind::DistortedToUndistorted => return LenscalStatus::Unsupported,
    };
    let dataset = match load_dataset(std::path::Path::new(path)) {
        Ok(d) => d,
        Err(DatasetError::Io(_)) => return LenscalStatus::Io,
        Err(_) => return LenscalStatus::InvalidArgument,
    };
    let result = match calibrate(&dataset, fit_kind, &LmOptions::default()) {
        Ok(r) => r,
        Err(PipelineError::NotEnoughViews { .. } | PipelineError::NotEnoughPoints { .. }) => {
            return LenscalStatus::InvalidArgument
        }
        Err(_) => return LenscalStatus::CalibrationFailed,
    };
    let (k1, k2) = result.distortion.coefficients();
    let handle = Box::new(LenscalCalibration {
        intrinsics: result.intrinsics,
        k1,
        k2: k2.unwrap_or(0.0),
        has_k2: k2.is_some(),
        final_j: result.final_j,
        iterations: result.iterations,
    });
    unsafe { *out = Box::into_raw(handle) };
    LenscalStatus::Ok
}

/// Release a calibration result handle. Accepts null.
#[no_mangle]
pub unsafe extern "C" fn lenscal_calibration_free(cal: *mut LenscalCalibration) {
    if !cal.is_null() {
        drop(unsafe { Box::from_raw(cal) });
    }
}

/// Copy the five intrinsic parameters out of a calibration result.
#[no_mangle]
pub unsafe extern "C" fn lenscal_calibration_intrinsics(
    cal: *const LenscalCalibration,
    out_alpha: *mut f64,
    out_beta: *mut f64,
    out_gamma: *mut f64,
    out_u0: *mut f64,
    out_v0: *mut f64,
) -> LenscalStatus {
    let Some(cal) = (unsafe { cal.as_ref() }) else {
        return LenscalStatus::NullPointer;
    };
    for p in [out_alpha, out_beta, out_gamma, out_u0, out_v0] {
        if p.is_null() {
            return LenscalStatus::NullPointer;
        }
    }
    unsafe {
        *out_alpha = cal.intrinsics.alpha;
        *out_beta = cal.intrinsics.beta;
        *out_gamma = cal.intrinsics.gamma;
        *out_u0 = cal.intrinsics.u0;
        *out_v0 = cal.intrinsics.v0;
    }
    LenscalStatus::Ok
}

/// Copy the fitted distortion coefficients. `out_has_k2` is 0 for the
/// single-coefficient model, in which case `out_k2` is set to 0.
#[no_mangle]
pub unsafe extern "C" fn lenscal_calibration_distortion(
    cal: *const LenscalCalibration,
    out_k1: *mut f64,
    out_k2: *mut f64,
    out_has_k2: *mut i32,
) -> LenscalStatus {
    let Some(cal) = (unsafe { cal.as_ref() }) else {
        return LenscalStatus::NullPointer;
    };
    if out_k1.is_null() || out_k2.is_null() || out_has_k2.is_null() {
        return LenscalStatus::NullPointer;
    }
    unsafe {
        *out_k1 = cal.k1;
        *out_k2 = cal.k2;
        *out_has_k2 = cal.has_k2 as i32;
    }
    LenscalStatus::Ok
}

/// Final value of the reprojection objective J.
#[no_mangle]
pub unsafe extern "C" fn lenscal_calibration_final_j(
    cal: *const LenscalCalibration,
    out_j: *mut f64,
) -> LenscalStatus {
    let (Some(cal), Some(out)) = (unsafe { cal.as_ref() }, unsafe { out_j.as_mut() }) else {
        return LenscalStatus::NullPointer;
    };
    *out = cal.final_j;
    LenscalStatus::Ok
}

/// Number of accepted refinement iterations.
#[no_mangle]
pub unsafe extern "C" fn lenscal_calibration_iterations(
    cal: *const LenscalCalibration,
    out_iters: *mut usize,
) -> LenscalStatus {
    let (Some(cal), Some(out)) = (unsafe { cal.as_ref() }, unsafe { out_iters.as_mut() }) else {
        return LenscalStatus::NullPointer;
    };
    *out = cal.iterations;
    LenscalStatus::Ok
}
