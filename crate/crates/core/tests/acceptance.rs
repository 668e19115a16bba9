//! End-to-end acceptance suite. Each test prints one PASS line; a failing
//! assertion marks the criterion red.

use lenscal::{
    approx_inverse_even_poly2, calibrate_with_init, initialize, objective_j, CameraIntrinsics,
    DistortionKind, DistortionModel, LmOptions, PoseRecipe, SynthSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pass(n: usize, what: &str) {
    println!("PASS criterion {n}: {what}");
}

fn synth_spec(distortion: DistortionModel, sigma: f64, seed: u64) -> SynthSpec {
    SynthSpec {
        grid_rows: 8,
        grid_cols: 8,
        square_size: 30.0,
        intrinsics: CameraIntrinsics::new(832.5, 832.5, 0.2, 304.0, 206.5).unwrap(),
        distortion,
        poses: PoseRecipe::default().into(),
        noise_sigma: sigma,
        rng_seed: seed,
    }
}

fn tight_opts() -> LmOptions {
    LmOptions {
        param_tol: 1e-10,
        fn_tol: 1e-12,
        max_iters: 300,
        max_fn_evals: 60000,
        ..LmOptions::default()
    }
}

/// Criterion 1: Exact inverse for the published quad-cubic coefficient pairs.
#[test]
fn criterion_1_exact_inverse_suite() {
    let pairs = [(-0.0215, -0.1566), (-0.1067, -0.1577), (-0.1192, -0.1365)];
    for (k1, k2) in pairs {
        let m = DistortionModel::QuadCubic { k1, k2 };
        let r_max = m.valid_radius_range().r_max;
        assert!(r_max.is_finite());
        for i in 0..100 {
            let r = 0.99 * r_max * i as f64 / 99.0;
            let rd = m.distort_radius(r).unwrap();
            let back = m.undistort_radius_analytic(rd).unwrap();
            assert!(
                (back - r).abs() <= 1e-10,
                "k=({k1},{k2}) r={r} back={back}"
            );
        }
    }
    pass(1, "analytic round trip <= 1e-10 on all three published coefficient pairs");
}

/// Criterion 2: Analytic and safeguarded-Newton inverses agree on random models,
/// including degenerate k2 routing.
#[test]
fn criterion_2_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..10_000 {
        let (k1, k2) = if trial % 100 == 0 {
            // degenerate routing cases
            (rng.gen_range(-0.5..0.5), rng.gen_range(-1e-13..1e-13))
        } else {
            (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))
        };
        let m = DistortionModel::QuadCubic { k1, k2 };
        let range = m.valid_radius_range();
        let r = rng.gen_range(0.0..range.r_max.min(3.0) * 0.999);
        let rd = m.distort_radius(r).unwrap();
        let a = m.undistort_radius_analytic(rd).unwrap();
        let n = m.undistort_radius_numeric(rd).unwrap();
        assert!(
            (a - n).abs() <= 1e-9,
            "k=({k1},{k2}) rd={rd} analytic={a} newton={n}"
        );
    }
    pass(2, "analytic and Newton inverses agree <= 1e-9 on 10^4 random models");
}

/// Criterion 3: Noiseless pipeline recovery at public-table magnitudes.
#[test]
fn criterion_3_noiseless_pipeline_recovery() {
    let spec = synth_spec(DistortionModel::QuadCubic { k1: -0.12, k2: -0.14 }, 0.0, 42);
    let (dataset, truth) = lenscal::synth_views(&spec).unwrap();
    let result = lenscal::calibrate(&dataset, DistortionKind::QuadCubic, &tight_opts()).unwrap();

    assert!(result.final_j <= 1e-10, "J = {}", result.final_j);
    let t = truth.intrinsics;
    let r = result.intrinsics;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-12);
    assert!(rel(r.alpha, t.alpha) <= 1e-6);
    assert!(rel(r.beta, t.beta) <= 1e-6);
    assert!(rel(r.gamma, t.gamma) <= 1e-6, "gamma {} vs {}", r.gamma, t.gamma);
    assert!(rel(r.u0, t.u0) <= 1e-6);
    assert!(rel(r.v0, t.v0) <= 1e-6);
    let (k1, k2) = result.distortion.coefficients();
    assert!(rel(k1, -0.12) <= 1e-6, "k1 = {k1}");
    assert!(rel(k2.unwrap(), -0.14) <= 1e-6, "k2 = {k2:?}");
    for (pose, tpose) in result.poses.iter().zip(&truth.poses) {
        assert!((pose.rotation - tpose.rotation).norm() <= 1e-6);
        assert!(
            (pose.translation - tpose.translation).norm() / tpose.translation.norm() <= 1e-6
        );
    }
    // accepted costs strictly decrease (criterion 8 hook)
    assert_monotone(&result.cost_history);
    pass(3, "noiseless calibration recovers every parameter <= 1e-6 relative, J <= 1e-10");
}

/// Criterion 4: Noisy objective lands at the chi-square floor.
#[test]
fn criterion_4_noisy_floor() {
    let spec = synth_spec(DistortionModel::QuadCubic { k1: -0.12, k2: -0.14 }, 0.5, 42);
    let (dataset, truth) = lenscal::synth_views(&spec).unwrap();
    let result = lenscal::calibrate(&dataset, DistortionKind::QuadCubic, &tight_opts()).unwrap();

    // E[J] = 2 N n sigma^2 with N=5 views, n=64 points, sigma=0.5
    let expected = 2.0 * 5.0 * 64.0 * 0.25;
    assert!(
        result.final_j >= 0.7 * expected && result.final_j <= 1.3 * expected,
        "final J = {} vs expected {expected}",
        result.final_j
    );
    let realized =
        objective_j(&truth.intrinsics, &truth.distortion, &truth.poses, &dataset).unwrap();
    assert!(
        result.final_j >= 0.9 * realized && result.final_j <= 1.1 * realized,
        "final J = {} vs realized-noise J = {realized}",
        result.final_j
    );
    assert_monotone(&result.cost_history);
    pass(4, "noisy final J within the chi-square floor bounds");
}

/// Criterion 5: The three-model ordering J(#1) <= J(#3) < J(#2) on data with
/// even-polynomial barrel distortion.
#[test]
fn criterion_5_model_ordering() {
    let mut spec = synth_spec(
        DistortionModel::EvenPoly2 {
            k1: -0.2286,
            k2: 0.1905,
        },
        0.3,
        42,
    );
    // closer views reach larger radii, where the model families separate
    spec.poses = PoseRecipe {
        depth_range: (1.2, 2.0),
        ..PoseRecipe::default()
    }
    .into();
    let (dataset, _) = lenscal::synth_views(&spec).unwrap();
    let init = initialize(&dataset).unwrap();
    let opts = tight_opts();

    let j1 = calibrate_with_init(&init, &dataset, DistortionKind::EvenPoly2, &opts).unwrap();
    let j2 = calibrate_with_init(&init, &dataset, DistortionKind::EvenPoly1, &opts).unwrap();
    let j3 = calibrate_with_init(&init, &dataset, DistortionKind::QuadCubic, &opts).unwrap();

    assert!(
        j1.final_j <= j3.final_j && j3.final_j < j2.final_j,
        "J1={} J3={} J2={}",
        j1.final_j,
        j3.final_j,
        j2.final_j
    );
    assert_monotone(&j1.cost_history);
    assert_monotone(&j2.cost_history);
    assert_monotone(&j3.cost_history);
    pass(5, "model ordering J(#1) <= J(#3) < J(#2) reproduced");
}

/// Criterion 6: Radial symmetry, center fixed point and odd-function properties on
/// randomized models and points.
#[test]
fn criterion_6_symmetry_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    for _ in 0..1000 {
        let m = match rng.gen_range(0..3) {
            0 => DistortionModel::EvenPoly2 {
                k1: rng.gen_range(-0.3..0.3),
                k2: rng.gen_range(-0.3..0.3),
            },
            1 => DistortionModel::EvenPoly1 {
                k1: rng.gen_range(-0.3..0.3),
            },
            _ => DistortionModel::QuadCubic {
                k1: rng.gen_range(-0.3..0.3),
                k2: rng.gen_range(-0.3..0.3),
            },
        };
        let p = lenscal::Point2::new(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6));

        // property 1: radial symmetry
        let d = m.distort_point(p).unwrap();
        let rd = m.distort_radius(p.coords.norm()).unwrap();
        assert!((d.coords.norm() - rd.abs()).abs() <= 1e-12);

        // property 2: center fixed point
        assert_eq!(m.distort_radius(0.0).unwrap(), 0.0);

        // property 3: odd function along any ray
        let neg = m.distort_point(lenscal::Point2::new(-p.x, -p.y)).unwrap();
        assert!((d.x + neg.x).abs() <= 1e-12 && (d.y + neg.y).abs() <= 1e-12);
    }
    pass(6, "radial symmetry, center fixed point and odd-function properties hold at 1e-12");
}

/// Criterion 7: The non-iterative approximate inverse is measurably worse than the
/// Newton inverse.
#[test]
fn criterion_7_approximation_error() {
    let (k1, k2) = (-0.05, 0.01);
    let m = DistortionModel::EvenPoly2 { k1, k2 };
    let mut worst_approx: f64 = 0.0;
    let mut worst_newton: f64 = 0.0;
    for i in 1..=200 {
        let rd = 1.2 * i as f64 / 200.0;
        let approx = approx_inverse_even_poly2(k1, k2, rd);
        worst_approx = worst_approx.max((m.distort_radius(approx).unwrap() - rd).abs());
        let newton = m.undistort_radius_numeric(rd).unwrap();
        worst_newton = worst_newton.max((m.distort_radius(newton).unwrap() - rd).abs());
    }
    assert!(worst_approx > 0.0);
    assert!(
        worst_approx >= 1e3 * worst_newton.max(f64::MIN_POSITIVE),
        "approx residual {worst_approx} vs newton residual {worst_newton}"
    );
    pass(7, "approximate inverse residual exceeds the Newton inverse by >= 10^3");
}

/// Criterion 8: Optimizer sanity: Rosenbrock to 1e-6 (accepted-cost monotonicity on
/// the pipeline runs is asserted inside criteria 3-5).
#[test]
fn criterion_8_optimizer_sanity() {
    let opts = LmOptions {
        param_tol: 1e-12,
        fn_tol: 1e-14,
        max_iters: 500,
        ..LmOptions::default()
    };
    let res = lenscal::minimize(
        |x: &nalgebra::DVector<f64>| {
            Ok(nalgebra::DVector::from_vec(vec![
                1.0 - x[0],
                10.0 * (x[1] - x[0] * x[0]),
            ]))
        },
        nalgebra::DVector::from_vec(vec![-1.2, 1.0]),
        &opts,
    )
    .unwrap();
    assert!((res.params[0] - 1.0).abs() <= 1e-6);
    assert!((res.params[1] - 1.0).abs() <= 1e-6);
    assert_monotone(&res.cost_trace);
    pass(8, "LM solves Rosenbrock to 1e-6 with strictly decreasing accepted costs");
}

fn assert_monotone(costs: &[f64]) {
    for w in costs.windows(2) {
        assert!(w[1] < w[0], "accepted cost increased: {} -> {}", w[0], w[1]);
    }
}
