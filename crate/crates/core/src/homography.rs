//! Planar homography estimation by the normalized direct linear transform.

use crate::geometry::Point2;
use nalgebra::{DMatrix, Matrix3, Vector3};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HomographyError {
    #[error("need at least 4 non-collinear point pairs, got {0}")]
    DegenerateConfiguration(usize),
}

/// Isotropic conditioning: translate the centroid to the origin and scale
/// the mean distance to sqrt(2).
fn normalization_transform(points: &[Point2]) -> Matrix3<f64> {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.y).sum::<f64>() / n;
    let mean_dist = points
        .iter()
        .map(|p| ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    let s = if mean_dist > 1e-12 {
        std::f64::consts::SQRT_2 / mean_dist
    } else {
        1.0
    };
    Matrix3::new(
        s, 0.0, -s * cx, //
        0.0, s, -s * cy, //
        0.0, 0.0, 1.0,
    )
}

fn apply(h: &Matrix3<f64>, p: Point2) -> Vector3<f64> {
    h * Vector3::new(p.x, p.y, 1.0)
}

/// DLT homography with Hartley normalization. `world` holds the planar
/// target coordinates (X, Y), `pixels` the observed projections. The result
/// has unit Frobenius norm and maps the first world point to a positive
/// third homogeneous coordinate.
pub fn estimate_homography(
    world: &[Point2],
    pixels: &[Point2],
) -> Result<Matrix3<f64>, HomographyError> {
    if world.len() != pixels.len() || world.len() < 4 {
        return Err(HomographyError::DegenerateConfiguration(
            world.len().min(pixels.len()),
        ));
    }
    let tw = normalization_transform(world);
    let tp = normalization_transform(pixels);

    let n = world.len();
    let mut a = DMatrix::zeros(2 * n, 9);
    for (i, (w, p)) in world.iter().zip(pixels).enumerate() {
        let wn = apply(&tw, *w);
        let pn = apply(&tp, *p);
        let (x, y) = (wn.x / wn.z, wn.y / wn.z);
        let (u, v) = (pn.x / pn.z, pn.y / pn.z);
        let r0 = 2 * i;
        a[(r0, 0)] = x;
        a[(r0, 1)] = y;
        a[(r0, 2)] = 1.0;
        a[(r0, 6)] = -u * x;
        a[(r0, 7)] = -u * y;
        a[(r0, 8)] = -u;
        let r1 = r0 + 1;
        a[(r1, 3)] = x;
        a[(r1, 4)] = y;
        a[(r1, 5)] = 1.0;
        a[(r1, 6)] = -v * x;
        a[(r1, 7)] = -v * y;
        a[(r1, 8)] = -v;
    }

    let svd = a.svd(false, true);
    let vt = svd.v_t.as_ref().expect("svd requested v_t");
    let sigma = &svd.singular_values;
    // rank must be 8 for a unique solution up to scale
    if sigma[7] < 1e-10 * sigma[0].max(1.0) {
        return Err(HomographyError::DegenerateConfiguration(n));
    }
    let h_vec = vt.row(8);
    let hn = Matrix3::new(
        h_vec[0], h_vec[1], h_vec[2], //
        h_vec[3], h_vec[4], h_vec[5], //
        h_vec[6], h_vec[7], h_vec[8],
    );
    let mut h = tp.try_inverse().expect("conditioning transform invertible") * hn * tw;
    h /= h.norm();
    if apply(&h, world[0]).z < 0.0 {
        h = -h;
    }
    Ok(h)
}
