use std::fs;
use std::path::Path;

use crate::error::{GmlError, Result};
use crate::matrix::Matrix;

use super::{BackboneSpec, Episode, EpisodeManifest};

pub const MANIFEST_FILE: &str = "manifest.json";

/// CSV matrices are a fixture convenience; anything this large must be binary.
pub const CSV_VALUE_LIMIT: usize = 10_000;

/// Loads and validates the bundle stored in `dir`.
pub fn load_episode(dir: impl AsRef<Path>) -> Result<Episode> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.is_file() {
        return Err(GmlError::ManifestNotFound(manifest_path));
    }
    let text = fs::read_to_string(&manifest_path).map_err(|e| GmlError::io(&manifest_path, e))?;
    let manifest: EpisodeManifest = serde_json::from_str(&text).map_err(|source| GmlError::Json {
        path: manifest_path.clone(),
        source,
    })?;

    let rows = manifest.sample_ids.len();
    let embeddings = manifest
        .backbones
        .iter()
        .map(|spec| read_matrix(dir, spec, rows))
        .collect::<Result<Vec<_>>>()?;
    Episode::new(manifest, embeddings)
}

fn read_matrix(dir: &Path, spec: &BackboneSpec, rows: usize) -> Result<Matrix> {
    let path = dir.join(&spec.data_file);
    if !path.is_file() {
        return Err(GmlError::MissingFile(path));
    }
    let mismatch = |message: String| GmlError::DimensionMismatch {
        file: spec.data_file.clone(),
        message,
    };
    match path.extension().and_then(|e| e.to_str()) {
        Some("f32") => {
            let bytes = fs::read(&path).map_err(|e| GmlError::io(&path, e))?;
            let expected = rows * spec.dim * 4;
            if bytes.len() != expected {
                return Err(mismatch(format!(
                    "expected {rows} rows x {} f32 values ({expected} bytes), found {} bytes ({:.2} rows)",
                    spec.dim,
                    bytes.len(),
                    bytes.len() as f64 / (4 * spec.dim.max(1)) as f64
                )));
            }
            let data = bytes
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
                .collect();
            Ok(Matrix::from_vec(rows, spec.dim, data).expect("length checked"))
        }
        Some("csv") => {
            let text = fs::read_to_string(&path).map_err(|e| GmlError::io(&path, e))?;
            let mut data = Vec::new();
            let mut found_rows = 0;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let before = data.len();
                for field in line.split(',') {
                    let v: f64 = field.trim().parse().map_err(|_| {
                        mismatch(format!("line {}: cannot parse `{}`", lineno + 1, field.trim()))
                    })?;
                    data.push(v);
                }
                if data.len() - before != spec.dim {
                    return Err(mismatch(format!(
                        "line {} has {} values, expected {}",
                        lineno + 1,
                        data.len() - before,
                        spec.dim
                    )));
                }
                if data.len() >= CSV_VALUE_LIMIT {
                    return Err(mismatch(format!(
                        "CSV matrices must hold fewer than {CSV_VALUE_LIMIT} values; use the .f32 format"
                    )));
                }
                found_rows += 1;
            }
            if found_rows != rows {
                return Err(mismatch(format!("expected {rows} rows, found {found_rows}")));
            }
            Ok(Matrix::from_vec(rows, spec.dim, data).expect("length checked"))
        }
        _ => Err(GmlError::Manifest(format!(
            "data file `{}` must end in .f32 or .csv",
            spec.data_file
        ))),
    }
}

/// Writes `episode` as a bundle under `dir`, creating the directory if needed.
/// Binary `.f32` files are written for every backbone whose `data_file` ends in
/// `.f32`; `.csv` files are written as text.
pub fn write_bundle(episode: &Episode, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| GmlError::io(dir, e))?;
    for (spec, mat) in episode.manifest().backbones.iter().zip(episode.embeddings()) {
        let path = dir.join(&spec.data_file);
        let bytes = if spec.data_file.ends_with(".csv") {
            let mut out = String::new();
            for row in mat.iter_rows() {
                let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                out.push_str(&fields.join(","));
                out.push('\n');
            }
            out.into_bytes()
        } else {
            mat.as_slice()
                .iter()
                .flat_map(|&v| (v as f32).to_le_bytes())
                .collect()
        };
        fs::write(&path, bytes).map_err(|e| GmlError::io(&path, e))?;
    }
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(episode.manifest()).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| GmlError::io(&path, e))
}
