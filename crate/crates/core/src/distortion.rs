//! Radial distortion models, forward distortion and exact undistortion.
//!
//! Four variants are supported. Three map the undistorted radius r to the
//! distorted radius r_d = r f(r):
//!
//! ```text
//! EvenPoly2:  f(r) = 1 + k1 r^2 + k2 r^4
//! EvenPoly1:  f(r) = 1 + k1 r^2
//! QuadCubic:  f(r) = 1 + k1 r + k2 r^2
//! ```
//!
//! The fourth runs the polynomial in the opposite direction,
//! r = r_d (1 + k1 r_d + k2 r_d^2), so its undistortion is a direct
//! evaluation and its forward distortion reuses the cubic inversion.
//!
//! The quad-cubic map r_d = r + k1 r^2 + k2 r^3 is a monic cubic in r, so
//! inverting it is exact: depress, classify by discriminant, and among the
//! real roots keep the one inside the monotone range.

use crate::cubic::real_roots_monic;
use crate::geometry::{CameraIntrinsics, Point2};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DistortionError {
    #[error("radius must be non-negative, got {0}")]
    NegativeRadius(f64),
    #[error("radius {radius} is beyond the invertible range (max {max})")]
    OutOfRange { radius: f64, max: f64 },
    #[error("inverse iteration failed to converge")]
    NoConvergence,
    #[error("analytic undistortion is only defined for the quad-cubic model")]
    AnalyticUnsupported,
}

/// Model selector used by the fitting pipeline and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum DistortionKind {
    EvenPoly2,
    EvenPoly1,
    QuadCubic,
}

impl DistortionKind {
    pub fn num_coefficients(self) -> usize {
        match self {
            DistortionKind::EvenPoly1 => 1,
            _ => 2,
        }
    }

    /// Name used in reports; mirrors the order of the comparison tables.
    pub fn label(self) -> &'static str {
        match self {
            DistortionKind::EvenPoly2 => "#1",
            DistortionKind::EvenPoly1 => "#2",
            DistortionKind::QuadCubic => "#3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum DistortionModel {
    EvenPoly2 { k1: f64, k2: f64 },
    EvenPoly1 { k1: f64 },
    QuadCubic { k1: f64, k2: f64 },
    DistortedToUndistorted { k1: f64, k2: f64 },
}

/// Interval on which the radial map is strictly increasing, together with
/// the image of its right endpoint. Infinite when the derivative never
/// vanishes. For `DistortedToUndistorted` the polynomial argument is the
/// distorted radius, so the roles of the two fields are exchanged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidRadiusRange {
    pub r_max: f64,
    pub rd_max: f64,
}

/// Coefficients below this magnitude route to the lower-degree closed form;
/// the cubic's a = k1/k2 blows up otherwise.
const DEGENERATE_COEFF: f64 = 1e-12;

impl DistortionModel {
    pub fn identity() -> Self {
        DistortionModel::QuadCubic { k1: 0.0, k2: 0.0 }
    }

    pub fn from_kind(kind: DistortionKind, coeffs: &[f64]) -> Self {
        match kind {
            DistortionKind::EvenPoly2 => DistortionModel::EvenPoly2 {
                k1: coeffs[0],
                k2: coeffs[1],
            },
            DistortionKind::EvenPoly1 => DistortionModel::EvenPoly1 { k1: coeffs[0] },
            DistortionKind::QuadCubic => DistortionModel::QuadCubic {
                k1: coeffs[0],
                k2: coeffs[1],
            },
        }
    }

    pub fn kind(&self) -> Option<DistortionKind> {
        match self {
            DistortionModel::EvenPoly2 { .. } => Some(DistortionKind::EvenPoly2),
            DistortionModel::EvenPoly1 { .. } => Some(DistortionKind::EvenPoly1),
            DistortionModel::QuadCubic { .. } => Some(DistortionKind::QuadCubic),
            DistortionModel::DistortedToUndistorted { .. } => None,
        }
    }

    pub fn coefficients(&self) -> (f64, Option<f64>) {
        match *self {
            DistortionModel::EvenPoly2 { k1, k2 } => (k1, Some(k2)),
            DistortionModel::EvenPoly1 { k1 } => (k1, None),
            DistortionModel::QuadCubic { k1, k2 } => (k1, Some(k2)),
            DistortionModel::DistortedToUndistorted { k1, k2 } => (k1, Some(k2)),
        }
    }

    /// The radial factor f(r) of the model's own polynomial.
    fn factor(&self, r: f64) -> f64 {
        match *self {
            DistortionModel::EvenPoly2 { k1, k2 } => 1.0 + k1 * r * r + k2 * r.powi(4),
            DistortionModel::EvenPoly1 { k1 } => 1.0 + k1 * r * r,
            DistortionModel::QuadCubic { k1, k2 }
            | DistortionModel::DistortedToUndistorted { k1, k2 } => 1.0 + k1 * r + k2 * r * r,
        }
    }

    /// Derivative of r f(r) with respect to r.
    fn poly_derivative(&self, r: f64) -> f64 {
        match *self {
            DistortionModel::EvenPoly2 { k1, k2 } => {
                1.0 + 3.0 * k1 * r * r + 5.0 * k2 * r.powi(4)
            }
            DistortionModel::EvenPoly1 { k1 } => 1.0 + 3.0 * k1 * r * r,
            DistortionModel::QuadCubic { k1, k2 }
            | DistortionModel::DistortedToUndistorted { k1, k2 } => {
                1.0 + 2.0 * k1 * r + 3.0 * k2 * r * r
            }
        }
    }

    fn poly_eval(&self, r: f64) -> f64 {
        r * self.factor(r)
    }

    /// Undistorted-to-distorted radial map.
    pub fn distort_radius(&self, r: f64) -> Result<f64, DistortionError> {
        if r < 0.0 {
            return Err(DistortionError::NegativeRadius(r));
        }
        match self {
            DistortionModel::DistortedToUndistorted { k1, k2 } => {
                // forward direction needs the cubic inversion, with the
                // roles of r and r_d exchanged
                let range = self.valid_radius_range();
                invert_quad_cubic(*k1, *k2, r, &range)
            }
            _ => Ok(self.poly_eval(r)),
        }
    }

    pub fn distort_point(&self, p: Point2) -> Result<Point2, DistortionError> {
        let r = p.coords.norm();
        if r == 0.0 {
            return Ok(p);
        }
        match self {
            DistortionModel::DistortedToUndistorted { .. } => {
                let rd = self.distort_radius(r)?;
                Ok(Point2::from(p.coords * (rd / r)))
            }
            _ => {
                let f = self.factor(r);
                Ok(Point2::new(p.x * f, p.y * f))
            }
        }
    }

    /// Pixel-space distortion: normalize, distort, denormalize.
    pub fn distort_pixel(
        &self,
        intr: &CameraIntrinsics,
        p: Point2,
    ) -> Result<Point2, DistortionError> {
        let n = intr.pixel_to_normalized(p);
        let d = self.distort_point(n)?;
        Ok(intr.normalized_to_pixel(d))
    }

    /// Exact closed-form inverse of the quad-cubic radial map.
    pub fn undistort_radius_analytic(&self, rd: f64) -> Result<f64, DistortionError> {
        match *self {
            DistortionModel::QuadCubic { k1, k2 } => {
                let range = self.valid_radius_range();
                invert_quad_cubic(k1, k2, rd, &range)
            }
            _ => Err(DistortionError::AnalyticUnsupported),
        }
    }

    /// Safeguarded Newton inverse of the radial map; independent of the
    /// closed-form path and usable with every variant.
    pub fn undistort_radius_numeric(&self, rd: f64) -> Result<f64, DistortionError> {
        if rd < 0.0 {
            return Err(DistortionError::NegativeRadius(rd));
        }
        if let DistortionModel::DistortedToUndistorted { .. } = self {
            return Ok(self.poly_eval(rd));
        }
        let range = self.valid_radius_range();
        if rd > range.rd_max * (1.0 + 1e-9) {
            return Err(DistortionError::OutOfRange {
                radius: rd,
                max: range.rd_max,
            });
        }
        newton_invert(|r| (self.poly_eval(r), self.poly_derivative(r)), rd, range.r_max)
    }

    /// Preferred inverse: closed form for the quad-cubic model, direct
    /// evaluation for the D-U variant, Newton otherwise.
    pub fn undistort_radius(&self, rd: f64) -> Result<f64, DistortionError> {
        if rd < 0.0 {
            return Err(DistortionError::NegativeRadius(rd));
        }
        match self {
            DistortionModel::QuadCubic { .. } => self.undistort_radius_analytic(rd),
            DistortionModel::DistortedToUndistorted { .. } => Ok(self.poly_eval(rd)),
            _ => self.undistort_radius_numeric(rd),
        }
    }

    /// Pixel-space undistortion; the displacement is purely radial, so the
    /// normalized vector is rescaled by r/r_d.
    pub fn undistort_pixel(
        &self,
        intr: &CameraIntrinsics,
        pd: Point2,
    ) -> Result<Point2, DistortionError> {
        let nd = intr.pixel_to_normalized(pd);
        let rd = nd.coords.norm();
        if rd == 0.0 {
            return Ok(pd);
        }
        let r = self.undistort_radius(rd)?;
        let n = Point2::from(nd.coords * (r / rd));
        Ok(intr.normalized_to_pixel(n))
    }

    /// Largest interval of strict monotonicity of the radial polynomial.
    pub fn valid_radius_range(&self) -> ValidRadiusRange {
        let r_max = match *self {
            DistortionModel::QuadCubic { k1, k2 }
            | DistortionModel::DistortedToUndistorted { k1, k2 } => {
                smallest_positive_root(3.0 * k2, 2.0 * k1, 1.0)
            }
            DistortionModel::EvenPoly1 { k1 } => {
                // derivative is linear in r^2
                smallest_positive_root(0.0, 3.0 * k1, 1.0).sqrt()
            }
            DistortionModel::EvenPoly2 { k1, k2 } => {
                smallest_positive_root(5.0 * k2, 3.0 * k1, 1.0).sqrt()
            }
        };
        let rd_max = if r_max.is_finite() {
            self.poly_eval(r_max)
        } else {
            f64::INFINITY
        };
        ValidRadiusRange { r_max, rd_max }
    }
}

/// Non-iterative approximate inverse of the two-term even model,
/// r = r_d (1 - k1 r_d^2 - k2 r_d^4). Inexact by construction.
pub fn approx_inverse_even_poly2(k1: f64, k2: f64, rd: f64) -> f64 {
    rd * (1.0 - k1 * rd * rd - k2 * rd.powi(4))
}

/// Smallest positive root of c2 x^2 + c1 x + c0; +inf when none exists.
/// For EvenPoly2 the argument is r^2, so the caller takes a square root.
fn smallest_positive_root(c2: f64, c1: f64, c0: f64) -> f64 {
    if c2.abs() < DEGENERATE_COEFF {
        if c1 < 0.0 {
            return -c0 / c1;
        }
        return f64::INFINITY;
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    let s = disc.sqrt();
    let (x1, x2) = ((-c1 - s) / (2.0 * c2), (-c1 + s) / (2.0 * c2));
    let lo = x1.min(x2);
    let hi = x1.max(x2);
    if lo > 0.0 {
        lo
    } else if hi > 0.0 {
        hi
    } else {
        f64::INFINITY
    }
}

/// Unique preimage of `target` under x -> x (1 + k1 x + k2 x^2) on the
/// monotone interval [0, range.r_max).
fn invert_quad_cubic(
    k1: f64,
    k2: f64,
    target: f64,
    range: &ValidRadiusRange,
) -> Result<f64, DistortionError> {
    if target < 0.0 {
        return Err(DistortionError::NegativeRadius(target));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    if target > range.rd_max * (1.0 + 1e-9) {
        return Err(DistortionError::OutOfRange {
            radius: target,
            max: range.rd_max,
        });
    }
    let poly = |r: f64| r * (1.0 + k1 * r + k2 * r * r);
    let deriv = |r: f64| 1.0 + 2.0 * k1 * r + 3.0 * k2 * r * r;

    let root = if k2.abs() < DEGENERATE_COEFF {
        if k1.abs() < DEGENERATE_COEFF {
            return Ok(target);
        }
        // k1 r^2 + r - target = 0, written to avoid cancellation
        let disc = 1.0 + 4.0 * k1 * target;
        if disc < 0.0 {
            return Err(DistortionError::OutOfRange {
                radius: target,
                max: range.rd_max,
            });
        }
        2.0 * target / (1.0 + disc.sqrt())
    } else {
        let a = k1 / k2;
        let b = 1.0 / k2;
        let c = -target / k2;
        let candidates = real_roots_monic(a, b, c);
        let upper = if range.r_max.is_finite() {
            range.r_max * (1.0 + 1e-9)
        } else {
            f64::INFINITY
        };
        let picked = candidates
            .iter()
            .copied()
            .filter(|&r| r >= -1e-9 && r <= upper)
            .min_by(|x, y| (x - target).abs().total_cmp(&(y - target).abs()));
        match picked {
            Some(r) => r.max(0.0),
            // all roots outside the monotone interval: fall back to the one
            // with the smallest forward residual
            None => candidates
                .iter()
                .copied()
                .min_by(|x, y| {
                    (poly(*x) - target)
                        .abs()
                        .total_cmp(&(poly(*y) - target).abs())
                })
                .ok_or(DistortionError::NoConvergence)?
                .max(0.0),
        }
    };

    // one Newton correction absorbs the rounding of the radical path when
    // the cubic is poorly scaled (tiny k2 makes a = k1/k2 huge)
    let mut r = root;
    for _ in 0..2 {
        let g = poly(r) - target;
        let d = deriv(r);
        if g == 0.0 || d.abs() < 1e-300 {
            break;
        }
        let next = r - g / d;
        if !next.is_finite() || next < 0.0 || (poly(next) - target).abs() >= g.abs() {
            break;
        }
        r = next;
    }
    Ok(r)
}

/// Newton iteration on g(r) = poly(r) - rd seeded at rd, safeguarded by
/// bisection so iterates never leave the monotone bracket.
fn newton_invert<F>(eval: F, rd: f64, r_max: f64) -> Result<f64, DistortionError>
where
    F: Fn(f64) -> (f64, f64),
{
    let mut lo = 0.0_f64;
    let mut hi = if r_max.is_finite() {
        r_max
    } else {
        // grow until the target is bracketed
        let mut h = rd.max(1.0);
        let mut tries = 0;
        while eval(h).0 < rd {
            h *= 2.0;
            tries += 1;
            if tries > 200 {
                return Err(DistortionError::NoConvergence);
            }
        }
        h
    };

    let tol = 1e-14 * rd.max(1.0);
    let mut r = rd.clamp(lo, hi);
    for _ in 0..100 {
        let (v, d) = eval(r);
        let g = v - rd;
        if g.abs() < tol {
            return Ok(r);
        }
        if g > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let mut next = if d.abs() > 1e-300 { r - g / d } else { f64::NAN };
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if next == r {
            return Ok(r);
        }
        r = next;
    }
    // bracket collapsed to rounding width counts as converged
    if (hi - lo).abs() < 1e-14 * hi.max(1.0) {
        return Ok(0.5 * (lo + hi));
    }
    Err(DistortionError::NoConvergence)
}
