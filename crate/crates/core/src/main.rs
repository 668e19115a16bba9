use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lenscal::dataset::{load_dataset, save_dataset};
use lenscal::report::{ComparisonReport, ModelRow};
use lenscal::{
    calibrate_with_init, initialize, objective_j, CameraIntrinsics, DistortionKind,
    DistortionModel, LmOptions, Point2, PoseRecipe, SynthSpec,
};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "lenscal", version, about = "Planar camera calibration with comparable radial distortion models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    /// f(r) = 1 + k1 r^2 + k2 r^4
    Poly24,
    /// f(r) = 1 + k1 r^2
    Poly2,
    /// f(r) = 1 + k1 r + k2 r^2 (exact closed-form inverse)
    Quadcubic,
}

impl From<ModelArg> for DistortionKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Poly24 => DistortionKind::EvenPoly2,
            ModelArg::Poly2 => DistortionKind::EvenPoly1,
            ModelArg::Quadcubic => DistortionKind::QuadCubic,
        }
    }
}

#[derive(Args, Clone, Copy)]
struct OptimizerArgs {
    /// Maximum refinement iterations
    #[arg(long, default_value_t = 120)]
    max_iters: usize,
    /// Parameter step tolerance
    #[arg(long, default_value_t = 1e-5)]
    tolx: f64,
    /// Relative cost-change tolerance
    #[arg(long, default_value_t = 1e-5)]
    tolfun: f64,
}

impl From<OptimizerArgs> for LmOptions {
    fn from(a: OptimizerArgs) -> Self {
        LmOptions {
            param_tol: a.tolx,
            fn_tol: a.tolfun,
            max_iters: a.max_iters,
            ..LmOptions::default()
        }
    }
}

#[derive(Args, Clone, Copy)]
struct IntrinsicsArgs {
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.0)]
    u0: f64,
    #[arg(long, default_value_t = 0.0)]
    v0: f64,
}

impl IntrinsicsArgs {
    fn build(&self) -> Result<CameraIntrinsics> {
        CameraIntrinsics::new(self.alpha, self.beta, self.gamma, self.u0, self.v0)
            .context("invalid intrinsics")
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit one distortion model to a dataset and report the result
    Calibrate {
        dataset: PathBuf,
        #[arg(long, value_enum)]
        model: ModelArg,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        optimizer: OptimizerArgs,
    },
    /// Fit all three models with shared initialization and print the
    /// comparison table
    Compare {
        dataset: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        optimizer: OptimizerArgs,
    },
    /// Map distorted pixels back to undistorted pixels
    Undistort {
        /// First distortion coefficient
        #[arg(long, allow_hyphen_values = true)]
        k1: f64,
        /// Second distortion coefficient (ignored by poly2)
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        k2: f64,
        #[arg(long, value_enum, default_value = "quadcubic")]
        model: ModelArg,
        /// File with one "u v" pair per line; omit to pass pixels inline
        #[arg(long)]
        points: Option<PathBuf>,
        /// Inline pixels as u,v pairs
        #[arg(value_name = "U,V", allow_hyphen_values = true)]
        pixels: Vec<String>,
        #[command(flatten)]
        intrinsics: IntrinsicsArgs,
    },
    /// Generate a synthetic dataset with known ground truth
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        noise_sigma: f64,
        #[arg(long, default_value_t = 5)]
        views: usize,
        /// Target corner grid, e.g. 8x8
        #[arg(long, default_value = "8x8")]
        grid: String,
        #[arg(long, default_value_t = 30.0)]
        square_size: f64,
        #[arg(long, value_enum, default_value = "quadcubic")]
        model: ModelArg,
        #[arg(long, default_value_t = -0.12, allow_hyphen_values = true)]
        k1: f64,
        #[arg(long, default_value_t = -0.14, allow_hyphen_values = true)]
        k2: f64,
        #[command(flatten)]
        intrinsics: IntrinsicsArgs,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Calibrate {
            dataset,
            model,
            out,
            optimizer,
        } => cmd_calibrate(&dataset, model.into(), out.as_deref(), &optimizer.into()),
        Command::Compare {
            dataset,
            out,
            optimizer,
        } => cmd_compare(&dataset, out.as_deref(), &optimizer.into()),
        Command::Undistort {
            k1,
            k2,
            model,
            points,
            pixels,
            intrinsics,
        } => cmd_undistort(k1, k2, model.into(), points.as_deref(), &pixels, &intrinsics),
        Command::Synth {
            out,
            seed,
            noise_sigma,
            views,
            grid,
            square_size,
            model,
            k1,
            k2,
            intrinsics,
        } => cmd_synth(
            &out,
            seed,
            noise_sigma,
            views,
            &grid,
            square_size,
            model.into(),
            k1,
            k2,
            &intrinsics,
        ),
    }
}

fn emit(out: Option<&std::path::Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing report to {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_calibrate(
    dataset_path: &std::path::Path,
    kind: DistortionKind,
    out: Option<&std::path::Path>,
    opts: &LmOptions,
) -> Result<()> {
    let dataset = load_dataset(dataset_path)
        .with_context(|| format!("loading {}", dataset_path.display()))?;
    let init = initialize(&dataset)?;
    let result = calibrate_with_init(&init, &dataset, kind, opts)?;

    let row = ModelRow::new(kind, &result);
    let mut text = String::new();
    text.push_str(&format!(
        "calibrated {} views x {} points, model {}\n",
        dataset.views.len(),
        dataset.target_points.len(),
        kind.label()
    ));
    text.push_str(&format!(
        "J = {:.4}   (after {} iterations)\n",
        result.final_j, result.iterations
    ));
    text.push_str(&format!(
        "alpha = {:.4}  gamma = {:.4}  u0 = {:.4}  beta = {:.4}  v0 = {:.4}\n",
        row.alpha, row.gamma, row.u0, row.beta, row.v0
    ));
    match row.k2 {
        Some(k2) => text.push_str(&format!("k1 = {:.4}  k2 = {:.4}\n", row.k1, k2)),
        None => text.push_str(&format!("k1 = {:.4}  k2 = -\n", row.k1)),
    }
    text.push_str("\n--- machine-readable ---\n");
    text.push_str(&serde_json::to_string_pretty(&row)?);
    text.push('\n');
    emit(out, &text)
}

fn cmd_compare(
    dataset_path: &std::path::Path,
    out: Option<&std::path::Path>,
    opts: &LmOptions,
) -> Result<()> {
    let dataset = load_dataset(dataset_path)
        .with_context(|| format!("loading {}", dataset_path.display()))?;
    let init = initialize(&dataset)?;

    let kinds = [
        DistortionKind::EvenPoly2,
        DistortionKind::EvenPoly1,
        DistortionKind::QuadCubic,
    ];
    let mut rows = Vec::new();
    for kind in kinds {
        let result = calibrate_with_init(&init, &dataset, kind, opts)
            .with_context(|| format!("fitting model {}", kind.label()))?;
        rows.push(ModelRow::new(kind, &result));
    }
    let report = ComparisonReport { rows };

    let mut text = report.render_table();
    text.push_str("\n--- machine-readable ---\n");
    text.push_str(&report.to_json());
    text.push('\n');
    emit(out, &text)
}

fn parse_inline_pixel(s: &str) -> Result<Point2> {
    let (u, v) = s
        .split_once(',')
        .with_context(|| format!("expected u,v pair, got '{s}'"))?;
    Ok(Point2::new(u.trim().parse()?, v.trim().parse()?))
}

fn cmd_undistort(
    k1: f64,
    k2: f64,
    kind: DistortionKind,
    points_file: Option<&std::path::Path>,
    inline: &[String],
    intrinsics: &IntrinsicsArgs,
) -> Result<()> {
    let intr = intrinsics.build()?;
    let model = DistortionModel::from_kind(kind, &[k1, k2]);

    let mut pixels = Vec::new();
    if let Some(path) = points_file {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let u: f64 = it.next().context("missing u")?.parse()?;
            let v: f64 = it.next().context("missing v")?.parse()?;
            pixels.push(Point2::new(u, v));
        }
    }
    for s in inline {
        pixels.push(parse_inline_pixel(s)?);
    }
    if pixels.is_empty() {
        bail!("no input pixels: pass u,v pairs inline or use --points");
    }

    for p in pixels {
        match model.undistort_pixel(&intr, p) {
            Ok(q) => println!("{} {} -> {} {}", p.x, p.y, q.x, q.y),
            Err(e) => println!("{} {} -> error: {e}", p.x, p.y),
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_synth(
    out: &std::path::Path,
    seed: u64,
    noise_sigma: f64,
    views: usize,
    grid: &str,
    square_size: f64,
    kind: DistortionKind,
    k1: f64,
    k2: f64,
    intrinsics: &IntrinsicsArgs,
) -> Result<()> {
    let (rows, cols) = grid
        .split_once(['x', 'X'])
        .context("grid must look like 8x8")?;
    let grid_rows: usize = rows.parse().context("grid rows")?;
    let grid_cols: usize = cols.parse().context("grid cols")?;

    let spec = SynthSpec {
        grid_rows,
        grid_cols,
        square_size,
        intrinsics: intrinsics.build()?,
        distortion: DistortionModel::from_kind(kind, &[k1, k2]),
        poses: PoseRecipe {
            num_views: views,
            ..PoseRecipe::default()
        }
        .into(),
        noise_sigma,
        rng_seed: seed,
    };
    let (dataset, truth) = lenscal::synth_views(&spec)?;
    save_dataset(out, &dataset, "unit")?;

    // ground-truth sidecar so the realized objective can be recomputed
    let truth_j = objective_j(&truth.intrinsics, &truth.distortion, &truth.poses, &dataset)?;
    let sidecar = serde_json::json!({
        "intrinsics": truth.intrinsics,
        "distortion": truth.distortion,
        "poses": truth.poses.iter().map(|p| {
            let w = p.axis_angle();
            serde_json::json!({
                "axis_angle": [w.x, w.y, w.z],
                "translation": [p.translation.x, p.translation.y, p.translation.z],
            })
        }).collect::<Vec<_>>(),
        "final_j": truth_j,
        "noise_sigma": noise_sigma,
        "rng_seed": seed,
    });
    let sidecar_path = out.with_extension("truth.json");
    std::fs::write(&sidecar_path, serde_json::to_string_pretty(&sidecar)?)?;

    println!(
        "wrote {} ({} views x {} points) and {}",
        out.display(),
        dataset.views.len(),
        dataset.target_points.len(),
        sidecar_path.display()
    );
    Ok(())
}
