//! Nearest-centroid baseline on mean CCD across backbones, computed from the
//! same support centroids the gradual engine starts from.

use crate::episode::Episode;
use crate::error::Result;
use crate::features::{ccd, class_centroids, preprocess, CentroidSource};

/// Predicted class per query row, in the order of [`Episode::query_rows`].
pub fn nearest_centroid(episode: &Episode) -> Result<Vec<(usize, usize)>> {
    let normalized = episode
        .embeddings()
        .iter()
        .map(preprocess)
        .collect::<Result<Vec<_>>>()?;
    let centroids = class_centroids(
        &normalized,
        &episode.support_rows(),
        episode.ways(),
        CentroidSource::Support,
    )?;
    episode
        .query_rows()
        .iter()
        .map(|&row| {
            let mut best = (usize::MAX, f64::INFINITY);
            for c in 0..episode.ways() {
                let mut d = 0.0;
                for (b, mat) in normalized.iter().enumerate() {
                    d += ccd(mat.row(row), centroids.centroid(b, c))?;
                }
                if d < best.1 {
                    best = (c, d);
                }
            }
            Ok((row, best.0))
        })
        .collect()
}

/// Fraction of ground-truth queries the baseline gets right.
pub fn nearest_centroid_accuracy(episode: &Episode) -> Result<Option<f64>> {
    let preds = nearest_centroid(episode)?;
    let scored: Vec<bool> = preds
        .iter()
        .filter_map(|&(row, c)| episode.ground_truth(row).map(|t| t == c))
        .collect();
    Ok((!scored.is_empty()).then(|| scored.iter().filter(|&&ok| ok).count() as f64 / scored.len() as f64))
}
