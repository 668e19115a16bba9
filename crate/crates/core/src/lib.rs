//! Planar camera calibration built around a radial distortion model with an
//! exact closed-form undistortion.
//!
//! The centerpiece is the quad-cubic radial map r_d = r (1 + k1 r + k2 r^2),
//! whose inverse reduces to a monic cubic and is solved exactly. Around it
//! sits a full planar calibration pipeline: homography-based closed-form
//! initialization, linear distortion estimation, and joint Levenberg-
//! Marquardt refinement of the reprojection objective, so competing
//! distortion models can be fit on the same data and compared by their
//! final cost.

pub mod cubic;
pub mod dataset;
pub mod distortion;
pub mod geometry;
pub mod homography;
pub mod optimizer;
pub mod pipeline;
pub mod report;
pub mod synth;

pub use distortion::{
    approx_inverse_even_poly2, DistortionError, DistortionKind, DistortionModel, ValidRadiusRange,
};
pub use geometry::{
    axis_angle_to_matrix, matrix_to_axis_angle, project, CameraIntrinsics, GeometryError, Point2,
    Point3, PoseRT,
};
pub use homography::{estimate_homography, HomographyError};
pub use optimizer::{minimize, numeric_jacobian, LmOptions, LmResult, OptimizerError, Termination};
pub use pipeline::{
    calibrate, calibrate_with_init, estimate_distortion_linear, estimate_extrinsics,
    estimate_intrinsics, initialize, objective_j, refine_all, CalibrationDataset,
    CalibrationResult, InitialEstimate, PipelineError, View,
};
pub use synth::{make_target, synth_views, PoseRecipe, PoseSpec, SynthError, SynthSpec};
