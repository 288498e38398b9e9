//! Geometry of the embedding spaces: L2 normalization, class centroids, class
//! centroid distances and the symmetric k-nearest-neighbor graph.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{GmlError, Result};
use crate::matrix::{dot, norm, Matrix};

pub const DEFAULT_K: usize = 6;

/// Scales every row to unit Euclidean norm.
pub fn preprocess(embeddings: &Matrix) -> Result<Matrix> {
    let mut out = embeddings.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let n = norm(row);
        if n == 0.0 || !n.is_finite() {
            return Err(GmlError::InvalidParameter(format!(
                "row {i} cannot be normalized (norm {n})"
            )));
        }
        row.iter_mut().for_each(|v| *v /= n);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CentroidSource {
    /// Original support samples only.
    Support,
    /// Support samples plus bootstrap auto-labels.
    Bootstrap,
    /// Every evidence variable, recomputed during inference.
    Evidence,
}

/// One `ways x dim` centroid matrix per backbone.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidSet {
    pub centroids: Vec<Matrix>,
    pub source: CentroidSource,
}

impl CentroidSet {
    pub fn centroid(&self, backbone: usize, class: usize) -> &[f64] {
        self.centroids[backbone].row(class)
    }
}

/// Class means of the labeled rows of each (already normalized) backbone.
pub fn class_centroids(
    normalized: &[Matrix],
    labels: &[(usize, usize)],
    ways: usize,
    source: CentroidSource,
) -> Result<CentroidSet> {
    let mut counts = vec![0usize; ways];
    for &(_, c) in labels {
        if c >= ways {
            return Err(GmlError::InvalidParameter(format!(
                "class {c} out of range for {ways} ways"
            )));
        }
        counts[c] += 1;
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(GmlError::ClassCount(format!("class {c} has no labeled samples")));
    }
    let centroids = normalized
        .iter()
        .map(|mat| {
            let mut sums = Matrix::zeros(ways, mat.cols());
            // Accumulate in row order so the result does not depend on label order.
            let mut sorted = labels.to_vec();
            sorted.sort_unstable();
            for &(row, c) in &sorted {
                sums.row_mut(c)
                    .iter_mut()
                    .zip(mat.row(row))
                    .for_each(|(s, v)| *s += v);
            }
            for (c, &n) in counts.iter().enumerate() {
                sums.row_mut(c).iter_mut().for_each(|s| *s /= n as f64);
            }
            sums
        })
        .collect();
    Ok(CentroidSet { centroids, source })
}

/// Cosine similarity clamped to `[-1, 1]`.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(GmlError::InvalidParameter("cosine of a zero vector".into()));
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Class centroid distance: one minus cosine similarity, in `[0, 2]`.
pub fn ccd(sample: &[f64], centroid: &[f64]) -> Result<f64> {
    Ok((1.0 - cosine(sample, centroid)?).clamp(0.0, 2.0))
}

/// Undirected KNN edge with `source < target`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnEdge {
    pub source: usize,
    pub target: usize,
    pub similarity: f64,
}

/// Symmetric union of every row's `k` most cosine-similar rows. Ties at equal
/// similarity go to the lower row index.
pub fn knn_graph(embeddings: &Matrix, k: usize) -> Result<Vec<KnnEdge>> {
    let n = embeddings.rows();
    if k == 0 || k >= n {
        return Err(GmlError::InvalidParameter(format!(
            "k = {k} outside [1, {}] for {n} samples",
            n.saturating_sub(1)
        )));
    }
    let unit = preprocess(embeddings)?;
    let mut sims = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let s = dot(unit.row(i), unit.row(j)).clamp(-1.0, 1.0);
            sims[i * n + j] = s;
            sims[j * n + i] = s;
        }
    }
    let mut edges = BTreeMap::new();
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        let row = &sims[i * n..(i + 1) * n];
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        for &j in &order[..k] {
            edges.insert((i.min(j), i.max(j)), row[j]);
        }
    }
    Ok(edges
        .into_iter()
        .map(|((source, target), similarity)| KnnEdge {
            source,
            target,
            similarity,
        })
        .collect())
}
