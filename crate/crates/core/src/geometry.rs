//! Pinhole projection, pixel/normalized conversions and rotation
//! parameterization.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

pub type Point2 = nalgebra::Point2<f64>;
pub type Point3 = nalgebra::Point3<f64>;

/// Depth below this is treated as degenerate rather than rounding noise.
pub const MIN_DEPTH: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("point at non-positive camera depth {depth:e}")]
    NonPositiveDepth { depth: f64 },
    #[error("intrinsic scales must be positive (alpha={alpha}, beta={beta})")]
    InvalidIntrinsics { alpha: f64, beta: f64 },
}

/// The five intrinsic parameters of the upper-triangular camera matrix.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CameraIntrinsics {
    /// Scale along the image x-axis, in pixels.
    pub alpha: f64,
    /// Scale along the image y-axis, in pixels.
    pub beta: f64,
    /// Skew between the two image axes, in pixels.
    pub gamma: f64,
    /// Principal point.
    pub u0: f64,
    pub v0: f64,
}

impl CameraIntrinsics {
    pub fn new(alpha: f64, beta: f64, gamma: f64, u0: f64, v0: f64) -> Result<Self, GeometryError> {
        if !(alpha > 0.0 && beta > 0.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(GeometryError::InvalidIntrinsics { alpha, beta });
        }
        Ok(Self {
            alpha,
            beta,
            gamma,
            u0,
            v0,
        })
    }

    /// Unit focal lengths, zero skew, principal point at the origin.
    pub fn identity() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            gamma: 0.0,
            u0: 0.0,
            v0: 0.0,
        }
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.alpha, self.gamma, self.u0, //
            0.0, self.beta, self.v0, //
            0.0, 0.0, 1.0,
        )
    }

    /// Normalized coordinates (x, y) with A [x y 1]^T = [u v 1]^T.
    pub fn pixel_to_normalized(&self, p: Point2) -> Point2 {
        let y = (p.y - self.v0) / self.beta;
        let x = (p.x - self.u0 - self.gamma * y) / self.alpha;
        Point2::new(x, y)
    }

    pub fn normalized_to_pixel(&self, p: Point2) -> Point2 {
        Point2::new(
            self.alpha * p.x + self.gamma * p.y + self.u0,
            self.beta * p.y + self.v0,
        )
    }
}

/// Rigid transform from the world frame to the camera frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseRT {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl PoseRT {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_axis_angle(w: Vector3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation: axis_angle_to_matrix(w),
            translation,
        }
    }

    pub fn axis_angle(&self) -> Vector3<f64> {
        matrix_to_axis_angle(&self.rotation)
    }

    /// World point expressed in the camera frame.
    pub fn transform(&self, pw: Point3) -> Vector3<f64> {
        self.rotation * pw.coords + self.translation
    }
}

/// Rodrigues formula; the zero vector maps to the identity.
pub fn axis_angle_to_matrix(w: Vector3<f64>) -> Matrix3<f64> {
    let theta = w.norm();
    if theta < 1e-12 {
        let k = skew(w);
        // second-order expansion keeps the map smooth through zero
        return Matrix3::identity() + k + 0.5 * k * k;
    }
    let axis = w / theta;
    let k = skew(axis);
    Matrix3::identity() + theta.sin() * k + (1.0 - theta.cos()) * (k * k)
}

/// Inverse Rodrigues; returns a vector with |w| in [0, pi].
pub fn matrix_to_axis_angle(r: &Matrix3<f64>) -> Vector3<f64> {
    let cos_theta = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();
    let v = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    );
    if theta < 1e-7 {
        // R ~ I + skew(w): the off-diagonal differences are 2w
        return v * 0.5;
    }
    if (std::f64::consts::PI - theta).abs() < 1e-7 {
        // near a half turn the antisymmetric part vanishes; use R + I
        let m = r + Matrix3::identity();
        let col = if m[(0, 0)] >= m[(1, 1)] && m[(0, 0)] >= m[(2, 2)] {
            m.column(0) / (2.0 * (1.0 + (r[(0, 0)] - 1.0) * 0.5)).sqrt().max(1e-12)
        } else if m[(1, 1)] >= m[(2, 2)] {
            m.column(1) / (2.0 * (1.0 + (r[(1, 1)] - 1.0) * 0.5)).sqrt().max(1e-12)
        } else {
            m.column(2) / (2.0 * (1.0 + (r[(2, 2)] - 1.0) * 0.5)).sqrt().max(1e-12)
        };
        let mut axis = Vector3::new(col[0], col[1], col[2]).normalize();
        // keep the sign consistent with the antisymmetric remainder
        if axis.dot(&v) < 0.0 {
            axis = -axis;
        }
        return axis * theta;
    }
    v * (theta / (2.0 * theta.sin()))
}

fn skew(w: Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(
        0.0, -w.z, w.y, //
        w.z, 0.0, -w.x, //
        -w.y, w.x, 0.0,
    )
}

/// Distortion-free perspective projection of a world point.
pub fn project(
    intr: &CameraIntrinsics,
    pose: &PoseRT,
    pw: Point3,
) -> Result<Point2, GeometryError> {
    let pc = pose.transform(pw);
    if pc.z <= MIN_DEPTH {
        return Err(GeometryError::NonPositiveDepth { depth: pc.z });
    }
    let x = pc.x / pc.z;
    let y = pc.y / pc.z;
    Ok(intr.normalized_to_pixel(Point2::new(x, y)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn optical_axis_maps_to_principal_point() {
        let intr = CameraIntrinsics::identity();
        let p = project(&intr, &PoseRT::identity(), Point3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(p, Point2::new(0.0, 0.0));

        // model 3 intrinsics from the public-image experiment
        let intr = CameraIntrinsics::new(832.486, 832.5157, 0.2042, 303.9605, 206.5811).unwrap();
        let p = project(&intr, &PoseRT::identity(), Point3::new(0.0, 0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(p.x, 303.9605, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 206.5811, epsilon = 1e-12);
    }

    #[test]
    fn perspective_division() {
        let intr = CameraIntrinsics::identity();
        let p = project(&intr, &PoseRT::identity(), Point3::new(0.5, -0.5, 2.0)).unwrap();
        assert_eq!(p, Point2::new(0.25, -0.25));
    }

    #[test]
    fn behind_camera_is_an_error() {
        let intr = CameraIntrinsics::identity();
        let err = project(&intr, &PoseRT::identity(), Point3::new(0.0, 0.0, -1.0)).unwrap_err();
        assert!(matches!(err, GeometryError::NonPositiveDepth { .. }));
    }

    #[test]
    fn pixel_normalized_examples() {
        let intr = CameraIntrinsics::new(2.0, 4.0, 0.0, 10.0, 20.0).unwrap();
        let n = intr.pixel_to_normalized(Point2::new(12.0, 24.0));
        assert_abs_diff_eq!(n.x, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(n.y, 1.0, epsilon = 1e-14);
        assert_eq!(
            intr.pixel_to_normalized(Point2::new(10.0, 20.0)),
            Point2::new(0.0, 0.0)
        );

        let intr = CameraIntrinsics::new(2.0, 4.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(
            intr.normalized_to_pixel(Point2::new(1.0, 1.0)),
            Point2::new(3.0, 4.0)
        );
    }

    #[test]
    fn pixel_normalized_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let intr = CameraIntrinsics::new(832.5, 831.0, 0.7, 304.0, 206.0).unwrap();
        for _ in 0..1000 {
            let p = Point2::new(rng.gen_range(-1e3..1e3), rng.gen_range(-1e3..1e3));
            let q = intr.normalized_to_pixel(intr.pixel_to_normalized(p));
            assert_abs_diff_eq!(q.x, p.x, epsilon = 1e-10);
            assert_abs_diff_eq!(q.y, p.y, epsilon = 1e-10);
        }
    }

    #[test]
    fn projection_matches_homogeneous_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let intr = CameraIntrinsics::new(800.0, 805.0, 0.3, 320.0, 240.0).unwrap();
        for _ in 0..200 {
            let w = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let t = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 5.0);
            let pose = PoseRT::from_axis_angle(w, t);
            let pw = Point3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let pc = pose.transform(pw);
            if pc.z <= MIN_DEPTH {
                continue;
            }
            let p = project(&intr, &pose, pw).unwrap();
            let h = intr.matrix() * pc;
            assert_abs_diff_eq!(p.x * h.z, h.x, epsilon = 1e-10 * h.x.abs().max(1.0));
            assert_abs_diff_eq!(p.y * h.z, h.y, epsilon = 1e-10 * h.y.abs().max(1.0));
        }
    }

    #[test]
    fn axis_angle_basics() {
        assert_eq!(axis_angle_to_matrix(Vector3::zeros()), Matrix3::identity());

        let r = axis_angle_to_matrix(Vector3::new(std::f64::consts::PI, 0.0, 0.0));
        let expected = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0));
        assert!((r - expected).norm() < 1e-12);
    }

    #[test]
    fn axis_angle_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let dir = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            if dir.norm() < 1e-6 {
                continue;
            }
            let w = dir.normalize() * rng.gen_range(0.0..3.1);
            let r = axis_angle_to_matrix(w);
            // orthonormality
            assert!((r.transpose() * r - Matrix3::identity()).norm() < 1e-10);
            assert_abs_diff_eq!(r.determinant(), 1.0, epsilon = 1e-10);
            let w2 = matrix_to_axis_angle(&r);
            assert!((w2 - w).norm() < 1e-10, "w={w:?} w2={w2:?}");
            assert!((axis_angle_to_matrix(w2) - r).norm() < 1e-10);
        }
    }
}
