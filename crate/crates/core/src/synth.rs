//! Seeded synthetic datasets: a planar grid target imaged through a known
//! camera, distorted, and optionally corrupted with Gaussian pixel noise.

use crate::distortion::DistortionModel;
use crate::geometry::{axis_angle_to_matrix, project, CameraIntrinsics, Point2, Point3, PoseRT};
use crate::pipeline::{objective_j, CalibrationDataset, CalibrationResult, View};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("target grid must be at least 2x2, got {rows}x{cols}")]
    BadGrid { rows: usize, cols: usize },
    #[error("view {view}, point {point}: projects behind the camera")]
    BehindCamera { view: usize, point: usize },
    #[error("view {view}, point {point}: radius {radius:.4} beyond the invertible range {max:.4}")]
    RadiusOutOfRange {
        view: usize,
        point: usize,
        radius: f64,
        max: f64,
    },
}

/// Pose sampling recipe: a handful of views tilted off-axis, with the
/// target centered a few target-widths in front of the camera.
#[derive(Debug, Clone, Copy)]
pub struct PoseRecipe {
    pub num_views: usize,
    pub max_tilt_deg: f64,
    /// Depth range in units of target width.
    pub depth_range: (f64, f64),
}

impl Default for PoseRecipe {
    fn default() -> Self {
        Self {
            num_views: 5,
            max_tilt_deg: 30.0,
            depth_range: (3.0, 5.0),
        }
    }
}

#[derive(Debug, Clone)]
pub enum PoseSpec {
    Explicit(Vec<PoseRT>),
    Recipe(PoseRecipe),
}

impl From<PoseRecipe> for PoseSpec {
    fn from(r: PoseRecipe) -> Self {
        PoseSpec::Recipe(r)
    }
}

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub square_size: f64,
    pub intrinsics: CameraIntrinsics,
    pub distortion: DistortionModel,
    pub poses: PoseSpec,
    pub noise_sigma: f64,
    pub rng_seed: u64,
}

/// Row-major planar grid (i*s, j*s, 0).
pub fn make_target(rows: usize, cols: usize, square_size: f64) -> Result<Vec<Point3>, SynthError> {
    if rows < 2 || cols < 2 {
        return Err(SynthError::BadGrid { rows, cols });
    }
    let mut pts = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            pts.push(Point3::new(
                i as f64 * square_size,
                j as f64 * square_size,
                0.0,
            ));
        }
    }
    Ok(pts)
}

fn sample_poses(spec: &SynthSpec, target: &[Point3]) -> Vec<PoseRT> {
    let recipe = match &spec.poses {
        PoseSpec::Explicit(poses) => return poses.clone(),
        PoseSpec::Recipe(r) => *r,
    };
    let width = (spec.grid_rows.max(spec.grid_cols) - 1) as f64 * spec.square_size;
    let center = target
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + p.coords)
        / target.len() as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let max_tilt = recipe.max_tilt_deg.to_radians();
    (0..recipe.num_views)
        .map(|_| {
            let w = Vector3::new(
                rng.gen_range(-max_tilt..max_tilt),
                rng.gen_range(-max_tilt..max_tilt),
                rng.gen_range(-0.2..0.2),
            );
            let rot = axis_angle_to_matrix(w);
            let depth = rng.gen_range(recipe.depth_range.0..recipe.depth_range.1) * width;
            let offset = Vector3::new(
                rng.gen_range(-0.1..0.1) * width,
                rng.gen_range(-0.1..0.1) * width,
                depth,
            );
            // rotate about the target center, then place the center at `offset`
            let t = offset - rot * center;
            PoseRT::new(rot, t)
        })
        .collect()
}

/// Generate observed (distorted, noisy) corners for every pose, together
/// with the exact ground truth including the objective value implied by the
/// realized noise.
pub fn synth_views(spec: &SynthSpec) -> Result<(CalibrationDataset, CalibrationResult), SynthError> {
    let target = make_target(spec.grid_rows, spec.grid_cols, spec.square_size)?;
    let poses = sample_poses(spec, &target);
    let range = spec.distortion.valid_radius_range();

    let mut views = Vec::with_capacity(poses.len());
    for (vi, pose) in poses.iter().enumerate() {
        // independent per-view noise stream so views can be generated
        // in any order
        let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.rng_seed.wrapping_add(1 + vi as u64));
        let normal = Normal::new(0.0, spec.noise_sigma.max(0.0)).expect("sigma >= 0");

        let mut corners = Vec::with_capacity(target.len());
        for (pi, pw) in target.iter().enumerate() {
            let ideal = project(&spec.intrinsics, pose, *pw)
                .map_err(|_| SynthError::BehindCamera { view: vi, point: pi })?;
            let r = spec.intrinsics.pixel_to_normalized(ideal).coords.norm();
            if r >= range.r_max {
                return Err(SynthError::RadiusOutOfRange {
                    view: vi,
                    point: pi,
                    radius: r,
                    max: range.r_max,
                });
            }
            let mut p = spec
                .distortion
                .distort_pixel(&spec.intrinsics, ideal)
                .map_err(|_| SynthError::RadiusOutOfRange {
                    view: vi,
                    point: pi,
                    radius: r,
                    max: range.r_max,
                })?;
            if spec.noise_sigma > 0.0 {
                p = Point2::new(p.x + normal.sample(&mut noise_rng), p.y + normal.sample(&mut noise_rng));
            }
            corners.push(Some(p));
        }
        views.push(View {
            name: format!("view{vi}"),
            corners,
        });
    }

    let dataset = CalibrationDataset {
        target_points: target,
        views,
    };
    let final_j = objective_j(&spec.intrinsics, &spec.distortion, &poses, &dataset)
        .expect("ground truth parameters project every observed point");
    let per_view_rms = dataset
        .views
        .iter()
        .zip(&poses)
        .map(|(view, pose)| {
            let mut sum = 0.0;
            let mut n = 0;
            for (pi, obs) in view.observations() {
                let ideal = project(&spec.intrinsics, pose, dataset.target_points[pi]).unwrap();
                let pred = spec.distortion.distort_pixel(&spec.intrinsics, ideal).unwrap();
                sum += (obs - pred).norm_squared();
                n += 1;
            }
            (sum / n.max(1) as f64).sqrt()
        })
        .collect();

    let truth = CalibrationResult {
        intrinsics: spec.intrinsics,
        distortion: spec.distortion,
        poses,
        final_j,
        per_view_rms,
        iterations: 0,
        cost_history: vec![final_j],
    };
    Ok((dataset, truth))
}
