//! Episode data model, on-disk bundles, synthetic generation and reports.
//!
//! A bundle is a directory holding `manifest.json` plus one matrix file per
//! backbone. See `FORMAT.md` at the repository root for the field-by-field
//! layout.

mod bundle;
mod report;
mod synth;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{GmlError, Result};
use crate::matrix::Matrix;

pub use bundle::{load_episode, write_bundle, CSV_VALUE_LIMIT, MANIFEST_FILE};
pub use report::{load_report, save_report, PredictionReport, QueryPrediction, REPORT_FORMAT};
pub use synth::{generate_synthetic, SynthParams};

pub const EPISODE_FORMAT: &str = "gml-episode/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackboneSpec {
    pub name: String,
    pub dim: usize,
    pub data_file: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeManifest {
    pub format: String,
    pub ways: usize,
    pub shots: usize,
    pub query_count: usize,
    /// External class names; position in this list is the dense class index.
    pub classes: Vec<String>,
    pub backbones: Vec<BackboneSpec>,
    pub sample_ids: Vec<String>,
    pub support_labels: BTreeMap<String, String>,
    pub query_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<BTreeMap<String, String>>,
}

/// A validated episode. Construction checks every manifest and matrix
/// invariant, so holding an `Episode` means the data is usable as-is.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    manifest: EpisodeManifest,
    embeddings: Vec<Matrix>,
    /// Support label per sample row, `None` for queries.
    support: Vec<Option<usize>>,
    truth: Vec<Option<usize>>,
    queries: Vec<usize>,
}

impl Episode {
    pub fn new(manifest: EpisodeManifest, embeddings: Vec<Matrix>) -> Result<Self> {
        let m = &manifest;
        if m.format != EPISODE_FORMAT {
            return Err(GmlError::Manifest(format!(
                "unsupported format tag `{}` (expected `{EPISODE_FORMAT}`)",
                m.format
            )));
        }
        if m.ways == 0 || m.shots == 0 || m.query_count == 0 {
            return Err(GmlError::Manifest(
                "ways, shots and query_count must be positive".into(),
            ));
        }
        if m.classes.len() != m.ways {
            return Err(GmlError::ClassCount(format!(
                "{} class names listed for {} ways",
                m.classes.len(),
                m.ways
            )));
        }
        let mut class_index = HashMap::new();
        for (i, name) in m.classes.iter().enumerate() {
            if class_index.insert(name.as_str(), i).is_some() {
                return Err(GmlError::ClassCount(format!("class `{name}` listed twice")));
            }
        }
        if m.backbones.is_empty() {
            return Err(GmlError::Manifest("at least one backbone is required".into()));
        }

        let mut row_of = HashMap::with_capacity(m.sample_ids.len());
        for (row, id) in m.sample_ids.iter().enumerate() {
            if row_of.insert(id.as_str(), row).is_some() {
                return Err(GmlError::DuplicateId(id.clone()));
            }
        }

        let lookup_class = |id: &str, name: &str| {
            class_index.get(name).copied().ok_or_else(|| {
                GmlError::ClassCount(format!("sample `{id}` has unknown class `{name}`"))
            })
        };

        let n = m.sample_ids.len();
        let mut support = vec![None; n];
        let mut per_class = vec![0usize; m.ways];
        for (id, name) in &m.support_labels {
            let row = *row_of
                .get(id.as_str())
                .ok_or_else(|| GmlError::Manifest(format!("support id `{id}` not in sample_ids")))?;
            let class = lookup_class(id, name)?;
            support[row] = Some(class);
            per_class[class] += 1;
        }
        if m.support_labels.len() != m.ways * m.shots {
            return Err(GmlError::ClassCount(format!(
                "{} support samples for {}-way {}-shot",
                m.support_labels.len(),
                m.ways,
                m.shots
            )));
        }
        if let Some(c) = per_class.iter().position(|&count| count != m.shots) {
            return Err(GmlError::ClassCount(format!(
                "class `{}` has {} support samples, expected {}",
                m.classes[c], per_class[c], m.shots
            )));
        }

        let mut queries = Vec::with_capacity(m.query_ids.len());
        let mut seen = HashSet::new();
        for id in &m.query_ids {
            if !seen.insert(id.as_str()) {
                return Err(GmlError::DuplicateId(id.clone()));
            }
            let row = *row_of
                .get(id.as_str())
                .ok_or_else(|| GmlError::Manifest(format!("query id `{id}` not in sample_ids")))?;
            if support[row].is_some() {
                return Err(GmlError::Manifest(format!(
                    "sample `{id}` is both a support and a query sample"
                )));
            }
            queries.push(row);
        }
        if queries.len() + m.support_labels.len() != n {
            return Err(GmlError::Manifest(format!(
                "{} sample ids but {} support + {} query ids",
                n,
                m.support_labels.len(),
                queries.len()
            )));
        }
        if queries.len() != m.ways * m.query_count {
            return Err(GmlError::ClassCount(format!(
                "{} query ids for {} ways x {} queries",
                queries.len(),
                m.ways,
                m.query_count
            )));
        }
        queries.sort_unstable();

        let mut truth = vec![None; n];
        if let Some(gt) = &m.ground_truth {
            for (id, name) in gt {
                let row = *row_of.get(id.as_str()).ok_or_else(|| {
                    GmlError::Manifest(format!("ground-truth id `{id}` not in sample_ids"))
                })?;
                if support[row].is_some() {
                    return Err(GmlError::Manifest(format!(
                        "ground-truth id `{id}` is a support sample"
                    )));
                }
                truth[row] = Some(lookup_class(id, name)?);
            }
        }

        if embeddings.len() != m.backbones.len() {
            return Err(GmlError::Manifest(format!(
                "{} embedding matrices for {} backbones",
                embeddings.len(),
                m.backbones.len()
            )));
        }
        for (spec, mat) in m.backbones.iter().zip(&embeddings) {
            if spec.dim == 0 {
                return Err(GmlError::Manifest(format!(
                    "backbone `{}` has zero dimension",
                    spec.name
                )));
            }
            if mat.rows() != n || mat.cols() != spec.dim {
                return Err(GmlError::DimensionMismatch {
                    file: spec.data_file.clone(),
                    message: format!(
                        "expected {n} rows x {} values, found {} x {}",
                        spec.dim,
                        mat.rows(),
                        mat.cols()
                    ),
                });
            }
            for (row, values) in mat.iter_rows().enumerate() {
                if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
                    return Err(GmlError::DimensionMismatch {
                        file: spec.data_file.clone(),
                        message: format!(
                            "non-finite value in row {row} (sample `{}`), column {bad}",
                            m.sample_ids[row]
                        ),
                    });
                }
                if values.iter().all(|&v| v == 0.0) {
                    return Err(GmlError::ZeroVector {
                        backbone: spec.name.clone(),
                        id: m.sample_ids[row].clone(),
                        row,
                    });
                }
            }
        }

        Ok(Episode {
            manifest,
            embeddings,
            support,
            truth,
            queries,
        })
    }

    pub fn manifest(&self) -> &EpisodeManifest {
        &self.manifest
    }

    pub fn embeddings(&self) -> &[Matrix] {
        &self.embeddings
    }

    pub fn ways(&self) -> usize {
        self.manifest.ways
    }

    pub fn shots(&self) -> usize {
        self.manifest.shots
    }

    pub fn backbone_count(&self) -> usize {
        self.embeddings.len()
    }

    pub fn sample_count(&self) -> usize {
        self.manifest.sample_ids.len()
    }

    pub fn sample_id(&self, row: usize) -> &str {
        &self.manifest.sample_ids[row]
    }

    pub fn class_names(&self) -> &[String] {
        &self.manifest.classes
    }

    /// Support label of a sample row, `None` for query rows.
    pub fn support_label(&self, row: usize) -> Option<usize> {
        self.support[row]
    }

    /// `(row, class)` for every support sample, in row order.
    pub fn support_rows(&self) -> Vec<(usize, usize)> {
        self.support
            .iter()
            .enumerate()
            .filter_map(|(row, c)| c.map(|c| (row, c)))
            .collect()
    }

    /// Query sample rows in ascending order.
    pub fn query_rows(&self) -> &[usize] {
        &self.queries
    }

    pub fn ground_truth(&self, row: usize) -> Option<usize> {
        self.truth[row]
    }

    pub fn has_ground_truth(&self) -> bool {
        self.truth.iter().any(Option::is_some)
    }
}
