use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GmlError, Result};
use crate::inference::{InferenceConfig, InferenceTrace};

pub const REPORT_FORMAT: &str = "gml-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryPrediction {
    pub id: String,
    pub predicted: usize,
    pub class_name: String,
    pub probabilities: Vec<f64>,
    /// Iteration that committed the label; 0 for bootstrap labels.
    pub iteration: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub format: String,
    /// Dense class index to external class name.
    pub class_names: Vec<String>,
    pub config: InferenceConfig,
    pub predictions: Vec<QueryPrediction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    pub trace: InferenceTrace,
}

impl PredictionReport {
    pub fn new(
        class_names: Vec<String>,
        config: InferenceConfig,
        predictions: Vec<QueryPrediction>,
        trace: InferenceTrace,
    ) -> Self {
        let accuracy = accuracy_of(&predictions);
        PredictionReport {
            format: REPORT_FORMAT.into(),
            class_names,
            config,
            predictions,
            accuracy,
            trace,
        }
    }

    /// Number of predictions with a known ground truth.
    pub fn scored(&self) -> usize {
        self.predictions.iter().filter(|p| p.truth.is_some()).count()
    }
}

fn accuracy_of(predictions: &[QueryPrediction]) -> Option<f64> {
    let (correct, total) = predictions
        .iter()
        .filter_map(|p| p.truth.map(|t| t == p.predicted))
        .fold((0usize, 0usize), |(c, n), ok| (c + ok as usize, n + 1));
    (total > 0).then(|| correct as f64 / total as f64)
}

pub fn save_report(report: &PredictionReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| GmlError::io(parent, e))?;
    }
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    fs::write(path, text + "\n").map_err(|e| GmlError::io(path, e))
}

pub fn load_report(path: impl AsRef<Path>) -> Result<PredictionReport> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| GmlError::io(path, e))?;
    let report: PredictionReport = serde_json::from_str(&text).map_err(|source| GmlError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    if report.format != REPORT_FORMAT {
        return Err(GmlError::Manifest(format!(
            "unsupported report format `{}`",
            report.format
        )));
    }
    Ok(report)
}
