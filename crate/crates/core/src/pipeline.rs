//! The four-step planar calibration procedure: closed-form intrinsics from
//! homographies, per-view extrinsics, linear distortion coefficients, and a
//! joint nonlinear refinement of the reprojection objective.

use crate::distortion::{DistortionKind, DistortionModel};
use crate::geometry::{
    project, CameraIntrinsics, GeometryError, Point2, Point3, PoseRT,
};
use crate::homography::{estimate_homography, HomographyError};
use crate::optimizer::{minimize, LmOptions, OptimizerError};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("dataset needs at least {needed} views, got {got}")]
    NotEnoughViews { needed: usize, got: usize },
    #[error("dataset views must observe at least 4 target points (view {view} has {got})")]
    NotEnoughPoints { view: usize, got: usize },
    #[error("homography stage, view {view}: {source}")]
    Homography {
        view: usize,
        source: HomographyError,
    },
    #[error("intrinsics stage: constraint system is ill-conditioned (parallel plane orientations?)")]
    IllConditioned,
    #[error("intrinsics stage: extracted parameters are not a valid camera matrix")]
    IntrinsicsExtraction,
    #[error("extrinsics stage, view {view}: target not in front of the camera")]
    BehindCamera { view: usize },
    #[error("distortion stage: radius spread too small to determine coefficients")]
    RankDeficient,
    #[error("projection failed at view {view}, point {point}: {source}")]
    Projection {
        view: usize,
        point: usize,
        source: GeometryError,
    },
    #[error("refinement stage: {0}")]
    Optimizer(#[from] OptimizerError),
    #[error("refinement stage: objective increased or became non-finite")]
    OptimizerDiverged,
    #[error("the D-U model variant is not fitted by this pipeline")]
    UnsupportedModel,
}

/// One image of the target: observed distorted pixels, index-aligned with
/// the target points. `None` marks a corner the detector did not report.
#[derive(Debug, Clone, PartialEq)]
pub struct View {
    pub name: String,
    pub corners: Vec<Option<Point2>>,
}

impl View {
    pub fn observations<'a>(&'a self) -> impl Iterator<Item = (usize, Point2)> + 'a {
        self.corners
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.map(|p| (i, p)))
    }
}

/// Planar target points (Z = 0) plus N views of observed corners.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationDataset {
    pub target_points: Vec<Point3>,
    pub views: Vec<View>,
}

impl CalibrationDataset {
    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn target_plane_points(&self) -> Vec<Point2> {
        self.target_points.iter().map(|p| Point2::new(p.x, p.y)).collect()
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.views.len() < 3 {
            return Err(PipelineError::NotEnoughViews {
                needed: 3,
                got: self.views.len(),
            });
        }
        for (i, v) in self.views.iter().enumerate() {
            let n = v.observations().count();
            if n < 4 {
                return Err(PipelineError::NotEnoughPoints { view: i, got: n });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CalibrationResult {
    pub intrinsics: CameraIntrinsics,
    pub distortion: DistortionModel,
    pub poses: Vec<PoseRT>,
    /// Sum of squared pixel reprojection errors over all views and points.
    pub final_j: f64,
    pub per_view_rms: Vec<f64>,
    pub iterations: usize,
    /// Accepted objective values of the refinement, initial value first.
    pub cost_history: Vec<f64>,
}

/// Closed-form estimates shared by every distortion model fit on the same
/// dataset (steps 1 and 2).
#[derive(Debug, Clone)]
pub struct InitialEstimate {
    pub intrinsics: CameraIntrinsics,
    pub poses: Vec<PoseRT>,
    pub homographies: Vec<Matrix3<f64>>,
}

/// Closed-form intrinsics from the image of the absolute conic. Each view
/// homography contributes two linear constraints on the symmetric matrix
/// B = A^-T A^-1; the smallest singular vector of the stacked system gives B.
pub fn estimate_intrinsics(
    homographies: &[Matrix3<f64>],
) -> Result<CameraIntrinsics, PipelineError> {
    if homographies.len() < 3 {
        return Err(PipelineError::NotEnoughViews {
            needed: 3,
            got: homographies.len(),
        });
    }

    // v_ij as a row of the constraint matrix, b = [B11 B12 B22 B13 B23 B33]
    let constraint = |h: &Matrix3<f64>, i: usize, j: usize| -> [f64; 6] {
        let hi = h.column(i);
        let hj = h.column(j);
        [
            hi[0] * hj[0],
            hi[0] * hj[1] + hi[1] * hj[0],
            hi[1] * hj[1],
            hi[2] * hj[0] + hi[0] * hj[2],
            hi[2] * hj[1] + hi[1] * hj[2],
            hi[2] * hj[2],
        ]
    };

    let n = homographies.len();
    let mut v = DMatrix::zeros(2 * n, 6);
    for (k, h) in homographies.iter().enumerate() {
        let v12 = constraint(h, 0, 1);
        let v11 = constraint(h, 0, 0);
        let v22 = constraint(h, 1, 1);
        for c in 0..6 {
            v[(2 * k, c)] = v12[c];
            v[(2 * k + 1, c)] = v11[c] - v22[c];
        }
    }

    let svd = v.svd(false, true);
    let sigma = &svd.singular_values;
    // a second near-zero singular value means the nullspace is not unique
    if sigma[4] < 1e-8 * sigma[0] {
        return Err(PipelineError::IllConditioned);
    }
    let vt = svd.v_t.as_ref().expect("svd requested v_t");
    let b = vt.row(5);
    let (b11, b12, b22, b13, b23, b33) = (b[0], b[1], b[2], b[3], b[4], b[5]);

    let denom = b11 * b22 - b12 * b12;
    if denom.abs() < 1e-300 || b11.abs() < 1e-300 {
        return Err(PipelineError::IntrinsicsExtraction);
    }
    let v0 = (b12 * b13 - b11 * b23) / denom;
    let lambda = b33 - (b13 * b13 + v0 * (b12 * b13 - b11 * b23)) / b11;
    let alpha_sq = lambda / b11;
    let beta_sq = lambda * b11 / denom;
    if !(alpha_sq > 0.0 && beta_sq > 0.0) {
        return Err(PipelineError::IntrinsicsExtraction);
    }
    let alpha = alpha_sq.sqrt();
    let beta = beta_sq.sqrt();
    let gamma = -b12 * alpha_sq * beta / lambda;
    let u0 = gamma * v0 / beta - b13 * alpha_sq / lambda;

    CameraIntrinsics::new(alpha, beta, gamma, u0, v0)
        .map_err(|_| PipelineError::IntrinsicsExtraction)
}

/// Pose from a view homography: r1 = lambda A^-1 h1, r2 = lambda A^-1 h2,
/// r3 = r1 x r2, t = lambda A^-1 h3, with the stacked frame projected onto
/// the nearest rotation. `front_point` fixes the sign so the target sits at
/// positive depth.
pub fn estimate_extrinsics(
    intr: &CameraIntrinsics,
    h: &Matrix3<f64>,
    front_point: Point3,
) -> Result<PoseRT, PipelineError> {
    let a_inv = intr
        .matrix()
        .try_inverse()
        .ok_or(PipelineError::IntrinsicsExtraction)?;

    let build = |sign: f64| -> PoseRT {
        let h1 = sign * a_inv * h.column(0);
        let h2 = sign * a_inv * h.column(1);
        let h3 = sign * a_inv * h.column(2);
        let lambda = 1.0 / h1.norm();
        let r1 = lambda * h1;
        let r2 = lambda * h2;
        let r3 = r1.cross(&r2);
        let t = lambda * h3;
        let m = Matrix3::from_columns(&[r1, r2, r3]);
        PoseRT::new(nearest_rotation(&m), Vector3::new(t.x, t.y, t.z))
    };

    for sign in [1.0, -1.0] {
        let pose = build(sign);
        if pose.transform(front_point).z > 0.0 {
            return Ok(pose);
        }
    }
    Err(PipelineError::BehindCamera { view: 0 })
}

/// Orthogonal polar factor: the rotation closest to `m` in Frobenius norm.
fn nearest_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd requested u");
    let vt = svd.v_t.expect("svd requested v_t");
    let mut r = u * vt;
    if r.determinant() < 0.0 {
        let mut u2 = u;
        u2.column_mut(2).neg_mut();
        r = u2 * vt;
    }
    r
}

/// Linear least-squares estimate of the distortion coefficients given fixed
/// intrinsics and poses. Each observation contributes two rows of
/// (u - u0) phi(r) k = u_d - u (and the v analog).
pub fn estimate_distortion_linear(
    intr: &CameraIntrinsics,
    poses: &[PoseRT],
    dataset: &CalibrationDataset,
    kind: DistortionKind,
) -> Result<DistortionModel, PipelineError> {
    let nk = kind.num_coefficients();
    let mut rows: Vec<[f64; 2]> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();

    for (vi, (view, pose)) in dataset.views.iter().zip(poses).enumerate() {
        for (pi, observed) in view.observations() {
            let ideal = project(intr, pose, dataset.target_points[pi]).map_err(|source| {
                PipelineError::Projection {
                    view: vi,
                    point: pi,
                    source,
                }
            })?;
            let n = intr.pixel_to_normalized(ideal);
            let r = n.coords.norm();
            let phi = match kind {
                DistortionKind::EvenPoly2 => [r * r, r.powi(4)],
                DistortionKind::EvenPoly1 => [r * r, 0.0],
                DistortionKind::QuadCubic => [r, r * r],
            };
            let du = ideal.x - intr.u0;
            let dv = ideal.y - intr.v0;
            rows.push([du * phi[0], du * phi[1]]);
            rhs.push(observed.x - ideal.x);
            rows.push([dv * phi[0], dv * phi[1]]);
            rhs.push(observed.y - ideal.y);
        }
    }

    let m = rows.len();
    let mut a = DMatrix::zeros(m, nk);
    for (i, row) in rows.iter().enumerate() {
        for c in 0..nk {
            a[(i, c)] = row[c];
        }
    }
    let b = DVector::from_vec(rhs);

    let svd = a.svd(true, true);
    let sigma = &svd.singular_values;
    if sigma[nk - 1] < 1e-12 * sigma[0].max(1e-300) {
        return Err(PipelineError::RankDeficient);
    }
    let k = svd.solve(&b, 1e-14).map_err(|_| PipelineError::RankDeficient)?;

    let coeffs = [k[0], if nk > 1 { k[1] } else { 0.0 }];
    Ok(DistortionModel::from_kind(kind, &coeffs))
}

/// The reprojection objective: project each target point, distort it, and
/// accumulate squared pixel distance to the observation.
pub fn objective_j(
    intr: &CameraIntrinsics,
    distortion: &DistortionModel,
    poses: &[PoseRT],
    dataset: &CalibrationDataset,
) -> Result<f64, PipelineError> {
    let mut j = 0.0;
    for (vi, (view, pose)) in dataset.views.iter().zip(poses).enumerate() {
        for (pi, observed) in view.observations() {
            let predicted = predict(intr, distortion, pose, dataset.target_points[pi], vi, pi)?;
            j += (observed - predicted).norm_squared();
        }
    }
    Ok(j)
}

fn predict(
    intr: &CameraIntrinsics,
    distortion: &DistortionModel,
    pose: &PoseRT,
    target: Point3,
    view: usize,
    point: usize,
) -> Result<Point2, PipelineError> {
    let ideal = project(intr, pose, target).map_err(|source| PipelineError::Projection {
        view,
        point,
        source,
    })?;
    distortion
        .distort_pixel(intr, ideal)
        .map_err(|_| PipelineError::Projection {
            view,
            point,
            source: GeometryError::NonPositiveDepth { depth: 0.0 },
        })
}

fn per_view_rms(
    intr: &CameraIntrinsics,
    distortion: &DistortionModel,
    poses: &[PoseRT],
    dataset: &CalibrationDataset,
) -> Result<Vec<f64>, PipelineError> {
    let mut out = Vec::with_capacity(dataset.views.len());
    for (vi, (view, pose)) in dataset.views.iter().zip(poses).enumerate() {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (pi, observed) in view.observations() {
            let predicted = predict(intr, distortion, pose, dataset.target_points[pi], vi, pi)?;
            sum += (observed - predicted).norm_squared();
            n += 1;
        }
        out.push((sum / n.max(1) as f64).sqrt());
    }
    Ok(out)
}

// Parameter vector layout for the joint refinement:
// [alpha, beta, gamma, u0, v0, k..., (axis-angle, t) per view]
fn pack_params(
    intr: &CameraIntrinsics,
    distortion: &DistortionModel,
    poses: &[PoseRT],
) -> (DVector<f64>, DistortionKind) {
    let kind = distortion.kind().expect("pipeline fits U-D models only");
    let nk = kind.num_coefficients();
    let mut p = Vec::with_capacity(5 + nk + 6 * poses.len());
    p.extend_from_slice(&[intr.alpha, intr.beta, intr.gamma, intr.u0, intr.v0]);
    let (k1, k2) = distortion.coefficients();
    p.push(k1);
    if nk > 1 {
        p.push(k2.unwrap_or(0.0));
    }
    for pose in poses {
        let w = pose.axis_angle();
        p.extend_from_slice(&[w.x, w.y, w.z]);
        p.extend_from_slice(&[pose.translation.x, pose.translation.y, pose.translation.z]);
    }
    (DVector::from_vec(p), kind)
}

fn unpack_params(
    x: &DVector<f64>,
    kind: DistortionKind,
    num_views: usize,
) -> (CameraIntrinsics, DistortionModel, Vec<PoseRT>) {
    let intr = CameraIntrinsics {
        alpha: x[0],
        beta: x[1],
        gamma: x[2],
        u0: x[3],
        v0: x[4],
    };
    let nk = kind.num_coefficients();
    let coeffs = [x[5], if nk > 1 { x[6] } else { 0.0 }];
    let distortion = DistortionModel::from_kind(kind, &coeffs);
    let base = 5 + nk;
    let poses = (0..num_views)
        .map(|i| {
            let o = base + 6 * i;
            PoseRT::from_axis_angle(
                Vector3::new(x[o], x[o + 1], x[o + 2]),
                Vector3::new(x[o + 3], x[o + 4], x[o + 5]),
            )
        })
        .collect();
    (intr, distortion, poses)
}

/// Joint Levenberg-Marquardt refinement of intrinsics, distortion
/// coefficients and all poses over the reprojection objective.
pub fn refine_all(
    initial: &CalibrationResult,
    dataset: &CalibrationDataset,
    opts: &LmOptions,
) -> Result<CalibrationResult, PipelineError> {
    if initial.distortion.kind().is_none() {
        return Err(PipelineError::UnsupportedModel);
    }
    let (x0, kind) = pack_params(&initial.intrinsics, &initial.distortion, &initial.poses);
    let num_views = dataset.views.len();

    // fixed observation order keeps residuals deterministic
    let obs: Vec<(usize, usize, Point2)> = dataset
        .views
        .iter()
        .enumerate()
        .flat_map(|(vi, view)| view.observations().map(move |(pi, p)| (vi, pi, p)))
        .collect();

    let residual = |x: &DVector<f64>| -> Result<DVector<f64>, String> {
        let (intr, distortion, poses) = unpack_params(x, kind, num_views);
        let mut r = DVector::zeros(2 * obs.len());
        for (idx, &(vi, pi, observed)) in obs.iter().enumerate() {
            let predicted = predict(
                &intr,
                &distortion,
                &poses[vi],
                dataset.target_points[pi],
                vi,
                pi,
            )
            .map_err(|e| e.to_string())?;
            r[2 * idx] = predicted.x - observed.x;
            r[2 * idx + 1] = predicted.y - observed.y;
        }
        Ok(r)
    };

    let initial_j = objective_j(
        &initial.intrinsics,
        &initial.distortion,
        &initial.poses,
        dataset,
    )?;
    let lm = minimize(residual, x0, opts)?;
    if !lm.final_cost.is_finite() {
        return Err(PipelineError::OptimizerDiverged);
    }
    // repacking rotations through axis-angle costs a few ULPs, so when the
    // start is already (numerically) optimal the refit cost can exceed the
    // initial objective; the initial estimate is returned unchanged then
    if lm.final_cost >= initial_j {
        let mut unchanged = initial.clone();
        unchanged.final_j = initial_j;
        unchanged.iterations = 0;
        unchanged.cost_history = vec![initial_j];
        return Ok(unchanged);
    }

    let (intr, distortion, poses) = unpack_params(&lm.params, kind, num_views);
    let rms = per_view_rms(&intr, &distortion, &poses, dataset)?;
    Ok(CalibrationResult {
        intrinsics: intr,
        distortion,
        poses,
        final_j: lm.final_cost,
        per_view_rms: rms,
        iterations: lm.iterations,
        cost_history: lm.cost_trace,
    })
}

/// Steps 1 and 2: homographies, closed-form intrinsics, per-view poses.
/// The output is shared verbatim across distortion model fits.
pub fn initialize(dataset: &CalibrationDataset) -> Result<InitialEstimate, PipelineError> {
    dataset.validate()?;
    let plane = dataset.target_plane_points();

    let mut homographies = Vec::with_capacity(dataset.views.len());
    for (vi, view) in dataset.views.iter().enumerate() {
        let mut world = Vec::new();
        let mut pixels = Vec::new();
        for (pi, p) in view.observations() {
            world.push(plane[pi]);
            pixels.push(p);
        }
        let h = estimate_homography(&world, &pixels)
            .map_err(|source| PipelineError::Homography { view: vi, source })?;
        homographies.push(h);
    }

    let intrinsics = estimate_intrinsics(&homographies)?;
    let mut poses = Vec::with_capacity(homographies.len());
    for (vi, h) in homographies.iter().enumerate() {
        let front = dataset.target_points[dataset.views[vi]
            .observations()
            .next()
            .map(|(i, _)| i)
            .unwrap_or(0)];
        let pose = estimate_extrinsics(&intrinsics, h, front)
            .map_err(|_| PipelineError::BehindCamera { view: vi })?;
        poses.push(pose);
    }

    Ok(InitialEstimate {
        intrinsics,
        poses,
        homographies,
    })
}

/// Steps 3 and 4 on top of a shared initialization.
pub fn calibrate_with_init(
    init: &InitialEstimate,
    dataset: &CalibrationDataset,
    kind: DistortionKind,
    opts: &LmOptions,
) -> Result<CalibrationResult, PipelineError> {
    let distortion = estimate_distortion_linear(&init.intrinsics, &init.poses, dataset, kind)?;
    let initial_j = objective_j(&init.intrinsics, &distortion, &init.poses, dataset)?;
    let rms = per_view_rms(&init.intrinsics, &distortion, &init.poses, dataset)?;
    let initial = CalibrationResult {
        intrinsics: init.intrinsics,
        distortion,
        poses: init.poses.clone(),
        final_j: initial_j,
        per_view_rms: rms,
        iterations: 0,
        cost_history: vec![initial_j],
    };
    refine_all(&initial, dataset, opts)
}

/// The full four-step procedure for one distortion model.
pub fn calibrate(
    dataset: &CalibrationDataset,
    kind: DistortionKind,
    opts: &LmOptions,
) -> Result<CalibrationResult, PipelineError> {
    let init = initialize(dataset)?;
    calibrate_with_init(&init, dataset, kind, opts)
}
