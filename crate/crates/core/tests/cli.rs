//! Black-box tests driving the `lenscal` binary.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lenscal"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn lenscal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn synth(dir: &Path, extra: &[&str]) -> std::path::PathBuf {
    let path = dir.join("data.json");
    let mut args = vec![
        "synth",
        "--out",
        path.to_str().unwrap(),
        "--alpha",
        "832.5",
        "--beta",
        "832.5",
        "--gamma",
        "0.2",
        "--u0",
        "304",
        "--v0",
        "206.5",
    ];
    args.extend_from_slice(extra);
    let out = run(&args);
    assert!(out.status.success(), "synth failed: {}", stderr(&out));
    path
}

#[test]
fn synth_then_calibrate_recovers_noiseless_truth() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &["--seed", "3", "--k1", "-0.12", "--k2", "-0.14"]);
    assert!(data.with_extension("truth.json").exists());

    let out = run(&["calibrate", data.to_str().unwrap(), "--model", "quadcubic"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("model #3"), "{text}");
    assert!(text.contains("k1 = -0.1200"), "{text}");
    assert!(text.contains("k2 = -0.1400"), "{text}");
    assert!(text.contains("alpha = 832.5000"), "{text}");
}

#[test]
fn compare_renders_all_models_and_blank_k2_cell() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(
        dir.path(),
        &["--seed", "5", "--noise-sigma", "0.3", "--model", "poly24", "--k1", "-0.2", "--k2", "0.1"],
    );

    let report = dir.path().join("report.txt");
    let out = run(&[
        "compare",
        data.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&report).unwrap();
    for label in ["#1", "#2", "#3"] {
        assert!(text.contains(label), "missing column {label}:\n{text}");
    }
    // model #2 has a single coefficient: its k2 cell must render as "-"
    let k2_line = text
        .lines()
        .find(|l| l.trim_start().starts_with("k2"))
        .expect("k2 row");
    assert!(k2_line.split_whitespace().any(|cell| cell == "-"), "{k2_line}");
}

#[test]
fn compare_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &["--seed", "9", "--noise-sigma", "0.5"]);
    let a = run(&["compare", data.to_str().unwrap()]);
    let b = run(&["compare", data.to_str().unwrap()]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn calibrate_rejects_too_few_views() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &["--seed", "1", "--views", "2"]);
    let out = run(&["calibrate", data.to_str().unwrap(), "--model", "poly24"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("3 views"), "{}", stderr(&out));
}

#[test]
fn unknown_model_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &["--seed", "1"]);
    let out = run(&["calibrate", data.to_str().unwrap(), "--model", "fisheye"]);
    // clap usage errors exit with 2, distinct from runtime failures
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("fisheye"));
}

#[test]
fn malformed_dataset_reports_parse_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\"header\": {").unwrap();
    let out = run(&["calibrate", path.to_str().unwrap(), "--model", "poly2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line"), "{}", stderr(&out));
}

#[test]
fn undistort_round_trips_a_distorted_pixel() {
    use lenscal::{CameraIntrinsics, DistortionModel, Point2};
    let intr = CameraIntrinsics::new(832.5, 832.5, 0.2, 304.0, 206.5).unwrap();
    let model = DistortionModel::QuadCubic { k1: -0.1067, k2: -0.1577 };
    let original = Point2::new(450.0, 120.0);
    let distorted = model.distort_pixel(&intr, original).unwrap();

    let out = run(&[
        "undistort",
        "--k1",
        "-0.1067",
        "--k2",
        "-0.1577",
        "--alpha",
        "832.5",
        "--beta",
        "832.5",
        "--gamma",
        "0.2",
        "--u0",
        "304",
        "--v0",
        "206.5",
        &format!("{},{}", distorted.x, distorted.y),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let line = stdout(&out);
    let fields: Vec<f64> = line
        .split([' ', '\n'])
        .filter(|s| !s.is_empty() && *s != "->")
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(fields.len(), 4, "{line}");
    assert!((fields[2] - original.x).abs() <= 1e-6, "{line}");
    assert!((fields[3] - original.y).abs() <= 1e-6, "{line}");
}

#[test]
fn undistort_reads_points_file_and_skips_comments() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.txt");
    std::fs::write(&pts, "# header comment\n304 206.5\n\n310 210\n").unwrap();
    let out = run(&[
        "undistort",
        "--k1",
        "-0.05",
        "--k2",
        "0.01",
        "--model",
        "poly24",
        "--points",
        pts.to_str().unwrap(),
        "--alpha",
        "832.5",
        "--beta",
        "832.5",
        "--u0",
        "304",
        "--v0",
        "206.5",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 2);
}

#[test]
fn undistort_without_pixels_fails() {
    let out = run(&["undistort", "--k1", "-0.1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("no input pixels"), "{}", stderr(&out));
}
