//! On-disk dataset format (version 1): a JSON document holding the planar
//! target points and, per view, the observed corners index-aligned with the
//! target. Missing corners are encoded as `null`.

use crate::geometry::{Point2, Point3};
use crate::pipeline::{CalibrationDataset, View};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("view '{view}': expected {expected} corners, got {actual}")]
    CountMismatch {
        view: String,
        expected: usize,
        actual: usize,
    },
    #[error("unsupported format version {0} (expected {FORMAT_VERSION})")]
    UnsupportedVersion(u32),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Header {
    pub format_version: u32,
    pub units: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Target {
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViewRecord {
    pub name: String,
    pub corners: Vec<Option<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetFile {
    pub header: Header,
    pub target: Target,
    pub views: Vec<ViewRecord>,
}

impl DatasetFile {
    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.header.format_version != FORMAT_VERSION {
            return Err(DatasetError::UnsupportedVersion(self.header.format_version));
        }
        let n = self.target.points.len();
        for v in &self.views {
            if v.corners.len() != n {
                return Err(DatasetError::CountMismatch {
                    view: v.name.clone(),
                    expected: n,
                    actual: v.corners.len(),
                });
            }
        }
        Ok(())
    }

    pub fn from_dataset(dataset: &CalibrationDataset, units: &str) -> Self {
        DatasetFile {
            header: Header {
                format_version: FORMAT_VERSION,
                units: units.to_string(),
            },
            target: Target {
                points: dataset.target_points.iter().map(|p| [p.x, p.y]).collect(),
            },
            views: dataset
                .views
                .iter()
                .map(|v| ViewRecord {
                    name: v.name.clone(),
                    corners: v.corners.iter().map(|c| c.map(|p| [p.x, p.y])).collect(),
                })
                .collect(),
        }
    }

    pub fn into_dataset(self) -> Result<CalibrationDataset, DatasetError> {
        self.validate()?;
        Ok(CalibrationDataset {
            target_points: self
                .target
                .points
                .iter()
                .map(|&[x, y]| Point3::new(x, y, 0.0))
                .collect(),
            views: self
                .views
                .into_iter()
                .map(|v| View {
                    name: v.name,
                    corners: v
                        .corners
                        .into_iter()
                        .map(|c| c.map(|[u, w]| Point2::new(u, w)))
                        .collect(),
                })
                .collect(),
        })
    }
}

fn map_json_error(e: serde_json::Error) -> DatasetError {
    use serde_json::error::Category;
    match e.classify() {
        Category::Syntax | Category::Eof => DatasetError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        },
        _ => DatasetError::Schema(e.to_string()),
    }
}

pub fn load_dataset(path: &Path) -> Result<CalibrationDataset, DatasetError> {
    let text = std::fs::read_to_string(path)?;
    let file: DatasetFile = serde_json::from_str(&text).map_err(map_json_error)?;
    file.into_dataset()
}

pub fn save_dataset(
    path: &Path,
    dataset: &CalibrationDataset,
    units: &str,
) -> Result<(), DatasetError> {
    let file = DatasetFile::from_dataset(dataset, units);
    let text = serde_json::to_string_pretty(&file).map_err(map_json_error)?;
    std::fs::write(path, text)?;
    Ok(())
}
