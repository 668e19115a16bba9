//! Human-readable calibration reports and the three-model comparison table.

use crate::distortion::DistortionKind;
use crate::pipeline::CalibrationResult;
use serde::Serialize;

/// One fitted model: the final objective, the five intrinsics and the
/// distortion coefficients.
#[derive(Debug, Clone, Serialize)]
pub struct ModelRow {
    pub model: String,
    pub j: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub u0: f64,
    pub beta: f64,
    pub v0: f64,
    pub k1: f64,
    pub k2: Option<f64>,
    pub iterations: usize,
    pub per_view_rms: Vec<f64>,
}

impl ModelRow {
    pub fn new(kind: DistortionKind, result: &CalibrationResult) -> Self {
        let (k1, k2) = result.distortion.coefficients();
        ModelRow {
            model: kind.label().to_string(),
            j: result.final_j,
            alpha: result.intrinsics.alpha,
            gamma: result.intrinsics.gamma,
            u0: result.intrinsics.u0,
            beta: result.intrinsics.beta,
            v0: result.intrinsics.v0,
            k1,
            k2,
            iterations: result.iterations,
            per_view_rms: result.per_view_rms.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ModelRow>,
}

/// Row labels in table order: J first, then the intrinsics, then the
/// distortion coefficients.
const ROW_LABELS: [&str; 8] = ["J", "alpha", "gamma", "u0", "beta", "v0", "k1", "k2"];

impl ComparisonReport {
    /// Aligned text table with 4 decimal places; an absent coefficient is
    /// printed as "-".
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let width = 12;
        out.push_str(&format!("{:<8}", "Model"));
        for row in &self.rows {
            out.push_str(&format!("{:>width$}", row.model));
        }
        out.push('\n');
        for (li, label) in ROW_LABELS.iter().enumerate() {
            out.push_str(&format!("{label:<8}"));
            for row in &self.rows {
                let cell = match li {
                    0 => format!("{:.4}", row.j),
                    1 => format!("{:.4}", row.alpha),
                    2 => format!("{:.4}", row.gamma),
                    3 => format!("{:.4}", row.u0),
                    4 => format!("{:.4}", row.beta),
                    5 => format!("{:.4}", row.v0),
                    6 => format!("{:.4}", row.k1),
                    _ => row
                        .k2
                        .map(|k| format!("{k:.4}"))
                        .unwrap_or_else(|| "-".to_string()),
                };
                out.push_str(&format!("{cell:>width$}"));
            }
            out.push('\n');
        }
        out
    }

    /// Full-precision machine-readable block.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(model: &str, k2: Option<f64>) -> ModelRow {
        ModelRow {
            model: model.to_string(),
            j: 148.27891,
            alpha: 830.7425,
            gamma: 0.2166,
            u0: 303.9486,
            beta: 830.7983,
            v0: 206.5574,
            k1: -0.1984,
            k2,
            iterations: 17,
            per_view_rms: vec![0.5, 0.4],
        }
    }

    #[test]
    fn table_prints_dash_for_absent_coefficient() {
        let report = ComparisonReport {
            rows: vec![row("#1", Some(0.1905)), row("#2", None)],
        };
        let table = report.render_table();
        let k2_line = table.lines().find(|l| l.starts_with("k2")).unwrap();
        assert!(k2_line.contains("0.1905"));
        assert!(k2_line.trim_end().ends_with('-'));
        // 4-decimal display
        assert!(table.contains("148.2789"));
    }

    #[test]
    fn json_round_trips_full_precision() {
        let report = ComparisonReport {
            rows: vec![row("#1", Some(0.190512345678))],
        };
        let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(v["rows"][0]["k2"].as_f64().unwrap(), 0.190512345678);
        assert_eq!(v["rows"][0]["j"].as_f64().unwrap(), 148.27891);
    }
}
