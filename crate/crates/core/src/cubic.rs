//! Real roots of a monic cubic via the depressed form.

/// Real solutions of r^3 + a r^2 + b r + c = 0.
///
/// Substituting r = rbar - a/3 gives rbar^3 + p rbar + q = 0 with
/// p = b - a^2/3 and q = 2a^3/27 - ab/3 + c. The discriminant
/// Delta = (q/2)^2 + (p/3)^3 selects between the Cardano radical
/// (one real root) and the trigonometric form (three real roots);
/// near Delta = 0 the repeated-root limit is used. A raw comparison
/// of Delta against zero is meaningless in floating point, so the
/// classification threshold scales with q^2 and |p|^3.
pub fn real_roots_monic(a: f64, b: f64, c: f64) -> Vec<f64> {
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let shift = a / 3.0;

    let half_q = q / 2.0;
    let third_p = p / 3.0;
    let delta = half_q * half_q + third_p * third_p * third_p;
    let tau = 1e-12 * (q * q).max(p.abs().powi(3)).max(1.0);

    let mut roots = Vec::with_capacity(3);
    if delta > tau {
        // one real root
        let s = delta.sqrt();
        let u = (-half_q + s).cbrt();
        let v = (-half_q - s).cbrt();
        roots.push(u + v - shift);
    } else if delta < -tau {
        // three real roots; requires p < 0
        let m = 2.0 * (-third_p).sqrt();
        let theta = (3.0 * q / (p * m)).clamp(-1.0, 1.0).acos() / 3.0;
        for k in 0..3 {
            let angle = theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            roots.push(m * angle.cos() - shift);
        }
    } else if p.abs() <= tau.cbrt() {
        // triple root limit
        roots.push((-q).cbrt() - shift);
    } else {
        // repeated root: rbar = -3q/(2p) twice, rbar = 3q/p once
        roots.push(3.0 * q / p - shift);
        roots.push(-1.5 * q / p - shift);
    }
    roots
}
