use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{GmlError, Result};
use crate::matrix::{dot, norm, Matrix};

use super::{BackboneSpec, Episode, EpisodeManifest, EPISODE_FORMAT};

/// Parameters of the Gaussian-cluster episode generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub ways: usize,
    pub shots: usize,
    pub queries: usize,
    pub dim: usize,
    pub backbones: usize,
    /// Norm of every class mean.
    pub separation: f64,
    /// Per-coordinate standard deviation of the isotropic noise.
    pub noise: f64,
    pub seed: u64,
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("ways", self.ways),
            ("shots", self.shots),
            ("queries", self.queries),
            ("dim", self.dim),
            ("backbones", self.backbones),
        ] {
            if v == 0 {
                return Err(GmlError::InvalidParameter(format!("{name} must be positive")));
            }
        }
        if !(self.separation.is_finite() && self.separation >= 0.0) {
            return Err(GmlError::InvalidParameter(format!(
                "separation must be a non-negative number, got {}",
                self.separation
            )));
        }
        if !(self.noise.is_finite() && self.noise > 0.0) {
            return Err(GmlError::InvalidParameter(format!(
                "noise must be positive, got {}",
                self.noise
            )));
        }
        Ok(())
    }
}

/// Class means per backbone: unit vectors scaled by `separation`, mutually
/// orthogonal whenever `dim >= ways`.
fn class_means(rng: &mut ChaCha8Rng, ways: usize, dim: usize, separation: f64) -> Vec<Vec<f64>> {
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(ways);
    while means.len() < ways {
        let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        if dim >= ways {
            for m in &means {
                let proj = dot(&v, m);
                v.iter_mut().zip(m).for_each(|(a, b)| *a -= proj * b);
            }
        }
        let n = norm(&v);
        if n < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|a| *a /= n);
        means.push(v);
    }
    for m in &mut means {
        m.iter_mut().for_each(|a| *a *= separation);
    }
    means
}

/// Draws a labeled episode of Gaussian clusters. Each backbone gets its own
/// independent class means, so the embedding spaces carry complementary
/// information. Values are rounded to `f32` so the episode survives a binary
/// bundle round trip unchanged.
pub fn generate_synthetic(params: &SynthParams) -> Result<Episode> {
    params.validate()?;
    let SynthParams {
        ways,
        shots,
        queries,
        dim,
        backbones,
        separation,
        noise,
        seed,
    } = *params;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut labels: Vec<usize> = (0..ways).flat_map(|c| std::iter::repeat_n(c, shots)).collect();
    let mut query_labels: Vec<usize> =
        (0..ways).flat_map(|c| std::iter::repeat_n(c, queries)).collect();
    query_labels.shuffle(&mut rng);

    let classes: Vec<String> = (0..ways).map(|c| format!("c{c}")).collect();
    let mut sample_ids = Vec::new();
    let mut support_labels = std::collections::BTreeMap::new();
    for c in 0..ways {
        for j in 0..shots {
            let id = format!("s{c}_{j}");
            support_labels.insert(id.clone(), classes[c].clone());
            sample_ids.push(id);
        }
    }
    let width = (ways * queries).to_string().len().max(3);
    let query_ids: Vec<String> = (0..ways * queries).map(|i| format!("q{i:0width$}")).collect();
    let ground_truth = query_ids
        .iter()
        .zip(&query_labels)
        .map(|(id, &c)| (id.clone(), classes[c].clone()))
        .collect();
    sample_ids.extend(query_ids.iter().cloned());
    labels.extend(query_labels);

    let mut embeddings = Vec::with_capacity(backbones);
    let mut specs = Vec::with_capacity(backbones);
    for b in 0..backbones {
        let means = class_means(&mut rng, ways, dim, separation);
        let mut mat = Matrix::zeros(labels.len(), dim);
        for (row, &c) in labels.iter().enumerate() {
            loop {
                let out = mat.row_mut(row);
                for (o, m) in out.iter_mut().zip(&means[c]) {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *o = (m + noise * z) as f32 as f64;
                }
                if out.iter().any(|&v| v != 0.0) {
                    break;
                }
            }
        }
        embeddings.push(mat);
        specs.push(BackboneSpec {
            name: format!("b{b}"),
            dim,
            data_file: format!("b{b}.f32"),
        });
    }

    let manifest = EpisodeManifest {
        format: EPISODE_FORMAT.into(),
        ways,
        shots,
        query_count: queries,
        classes,
        backbones: specs,
        sample_ids,
        support_labels,
        query_ids,
        ground_truth: Some(ground_truth),
    };
    Episode::new(manifest, embeddings)
}
