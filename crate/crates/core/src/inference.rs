//! Gradual inference: label query samples a batch at a time, easiest first.
//!
//! Each iteration screens the unlabeled variables by evidential support (top
//! `m`), ranks those by approximate entropy (top `n`), refits the influence
//! models on the current evidence, recomputes the finalists' marginals exactly
//! and commits the `batch` lowest-entropy finalists as new evidence.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::episode::{Episode, PredictionReport, QueryPrediction};
use crate::error::{GmlError, Result};
use crate::evidence::evidential_support;
use crate::features::{class_centroids, knn_graph, preprocess, ccd, CentroidSet, CentroidSource, DEFAULT_K};
use crate::graph::{
    build_graph, clamp_probabilities, infer_marginal, CcdFamilies, FactorGraph, FitRegistry, FitSnapshot,
};
use crate::influence::{FitOptions, PROB_EPS};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    /// Neighbors per sample in the KNN graph.
    pub k: usize,
    /// Candidates kept after evidential-support screening.
    pub m: usize,
    /// Finalists kept after approximate-entropy ranking.
    pub n: usize,
    /// Labels committed per iteration.
    pub batch: usize,
    /// Iterations between influence-model refits.
    pub refit_every: usize,
    /// Recompute class centroids from all evidence after every iteration.
    pub update_centroids: bool,
    /// Recorded for reproducibility; the driver itself draws no randomness.
    pub seed: u64,
    pub ccd_families: CcdFamilies,
    pub fit: FitOptions,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            k: DEFAULT_K,
            m: 50,
            n: 10,
            batch: 10,
            refit_every: 1,
            update_centroids: false,
            seed: 0,
            ccd_families: CcdFamilies::PerBackbone,
            fit: FitOptions::default(),
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(GmlError::InvalidParameter(msg));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(1 <= self.batch && self.batch <= self.n && self.n <= self.m) {
            return bad(format!(
                "require 1 <= batch <= n <= m, got batch = {}, n = {}, m = {}",
                self.batch, self.n, self.m
            ));
        }
        if self.refit_every == 0 {
            return bad("refit_every must be at least 1".into());
        }
        let f = &self.fit;
        if f.max_iterations == 0 || !(f.tolerance > 0.0) || !(0.0 < f.tau_min && f.tau_min <= f.tau_max) {
            return bad(format!("invalid fit options {f:?}"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapLabel {
    pub row: usize,
    pub id: String,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub row: usize,
    pub id: String,
    pub support: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finalist {
    pub row: usize,
    pub id: String,
    pub approximate_entropy: f64,
    pub exact_entropy: f64,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Commit {
    pub row: usize,
    pub id: String,
    pub label: usize,
    pub entropy: f64,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Unlabeled variables before this iteration.
    pub unlabeled: usize,
    pub candidates: Vec<Candidate>,
    /// Sorted by exact entropy, then row.
    pub finalists: Vec<Finalist>,
    pub committed: Vec<Commit>,
    /// The last committed and first uncommitted finalist had equal entropy.
    pub boundary_tie: bool,
    pub refit: bool,
    pub fits: Vec<FitSnapshot>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InferenceTrace {
    pub bootstrap: Vec<BootstrapLabel>,
    pub iterations: Vec<IterationRecord>,
}

/// Binary entropy in bits of the top class probability.
pub fn binary_entropy(p_max: f64) -> f64 {
    let p = p_max.clamp(PROB_EPS, 1.0 - PROB_EPS);
    let q = 1.0 - p;
    -(p * p.log2() + q * q.log2())
}

/// Evidential certainty: the inverse of entropy.
pub fn certainty(entropy: f64) -> f64 {
    1.0 / entropy
}

fn top_class(p: &[f64]) -> (usize, f64) {
    p.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (c, &v)| if v > best.1 { (c, v) } else { best })
}

/// Entropy of a variable's subgraph marginal under the given (possibly stale) fits.
pub fn approximate_entropy(graph: &FactorGraph, v: usize, fits: &FitRegistry) -> f64 {
    let sub = graph
        .subgraph(v)
        .expect("entropy is only ranked for unlabeled variables");
    binary_entropy(top_class(&infer_marginal(&sub, fits)).1)
}

/// Initial evidence: the support labels, plus for one-shot episodes the query
/// closest (mean CCD over backbones) to each class centroid. Classes claim in
/// ascending order; a sample is claimed at most once; ties go to the lower row.
pub fn bootstrap(
    episode: &Episode,
    normalized: &[Matrix],
    centroids: &CentroidSet,
) -> Result<BTreeMap<usize, usize>> {
    let mut labels: BTreeMap<usize, usize> = episode.support_rows().into_iter().collect();
    if episode.shots() != 1 {
        return Ok(labels);
    }
    let backbones = normalized.len() as f64;
    for c in 0..episode.ways() {
        let mut best: Option<(f64, usize)> = None;
        for &row in episode.query_rows() {
            if labels.contains_key(&row) {
                continue;
            }
            let mut total = 0.0;
            for (b, mat) in normalized.iter().enumerate() {
                total += ccd(mat.row(row), centroids.centroid(b, c))?;
            }
            let d = total / backbones;
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, row));
            }
        }
        if let Some((_, row)) = best {
            labels.insert(row, c);
        }
    }
    Ok(labels)
}

fn one_hot(ways: usize, label: usize) -> Vec<f64> {
    let mut p = vec![0.0; ways];
    p[label] = 1.0;
    clamp_probabilities(p)
}

/// Runs gradual inference over an episode and reports a label for every query.
pub fn gradual_inference(episode: &Episode, config: &InferenceConfig) -> Result<PredictionReport> {
    config.validate()?;
    let ways = episode.ways();
    let n_samples = episode.sample_count();
    if config.k >= n_samples {
        return Err(GmlError::InvalidParameter(format!(
            "k = {} must be below the sample count {n_samples}",
            config.k
        )));
    }
    let normalized = episode
        .embeddings()
        .iter()
        .map(preprocess)
        .collect::<Result<Vec<_>>>()?;

    let support = episode.support_rows();
    let support_centroids = class_centroids(&normalized, &support, ways, CentroidSource::Support)?;
    let evidence = bootstrap(episode, &normalized, &support_centroids)?;
    let centroids = if evidence.len() > support.len() {
        let labeled: Vec<_> = evidence.iter().map(|(&r, &c)| (r, c)).collect();
        class_centroids(&normalized, &labeled, ways, CentroidSource::Bootstrap)?
    } else {
        support_centroids
    };
    let edges = normalized
        .iter()
        .map(|m| knn_graph(m, config.k))
        .collect::<Result<Vec<_>>>()?;
    let mut graph = build_graph(episode, &centroids, &edges, &evidence)?;

    let mut trace = InferenceTrace {
        bootstrap: evidence
            .iter()
            .filter(|(row, _)| episode.support_label(**row).is_none())
            .map(|(&row, &label)| BootstrapLabel {
                row,
                id: episode.sample_id(row).to_string(),
                label,
            })
            .collect(),
        iterations: Vec::new(),
    };
    let mut outcome: BTreeMap<usize, (usize, Vec<f64>, usize)> = trace
        .bootstrap
        .iter()
        .map(|b| (b.row, (b.label, one_hot(ways, b.label), 0)))
        .collect();

    let mut fits = graph.fit_all(config.ccd_families, &config.fit);
    let mut iteration = 0;
    loop {
        let free = graph.inference_variables();
        if free.is_empty() {
            break;
        }
        iteration += 1;
        let m = config.m.min(free.len());
        let n = config.n.min(m);
        let batch = config.batch.min(n);

        let mut screened: Vec<(f64, usize)> = free
            .iter()
            .map(|&v| (evidential_support(&graph, v, &fits).score, v))
            .collect();
        screened.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        screened.truncate(m);

        let mut ranked: Vec<(f64, usize)> = screened
            .iter()
            .map(|&(_, v)| (approximate_entropy(&graph, v, &fits), v))
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        ranked.truncate(n);

        let refit = (iteration - 1) % config.refit_every == 0;
        if refit {
            fits = graph.fit_all(config.ccd_families, &config.fit);
        }
        let mut finalists = ranked
            .iter()
            .map(|&(approx, v)| {
                let probabilities = infer_marginal(&graph.subgraph(v)?, &fits);
                Ok(Finalist {
                    row: v,
                    id: graph.variable(v).id.clone(),
                    approximate_entropy: approx,
                    exact_entropy: binary_entropy(top_class(&probabilities).1),
                    probabilities,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        finalists.sort_by(|a, b| a.exact_entropy.total_cmp(&b.exact_entropy).then(a.row.cmp(&b.row)));
        let boundary_tie =
            batch < finalists.len() && finalists[batch - 1].exact_entropy == finalists[batch].exact_entropy;

        let committed: Vec<Commit> = finalists[..batch]
            .iter()
            .map(|f| Commit {
                row: f.row,
                id: f.id.clone(),
                label: top_class(&f.probabilities).0,
                entropy: f.exact_entropy,
                probabilities: f.probabilities.clone(),
            })
            .collect();
        for c in &committed {
            graph.commit_label(c.row, c.label);
            outcome.insert(c.row, (c.label, c.probabilities.clone(), iteration));
        }
        if config.update_centroids {
            let centroids = class_centroids(&normalized, &graph.evidence(), ways, CentroidSource::Evidence)?;
            graph.update_ccd(&normalized, &centroids)?;
        }

        trace.iterations.push(IterationRecord {
            iteration,
            unlabeled: free.len(),
            candidates: screened
                .iter()
                .map(|&(support, v)| Candidate {
                    row: v,
                    id: graph.variable(v).id.clone(),
                    support,
                })
                .collect(),
            finalists,
            committed,
            boundary_tie,
            refit,
            fits: fits.snapshot(),
        });
    }

    let predictions = episode
        .manifest()
        .query_ids
        .iter()
        .map(|id| {
            let row = episode
                .manifest()
                .sample_ids
                .iter()
                .position(|s| s == id)
                .expect("validated query id");
            let (label, probabilities, iteration) = outcome
                .remove(&row)
                .expect("every query is labeled once the loop ends");
            QueryPrediction {
                id: id.clone(),
                predicted: label,
                class_name: episode.class_names()[label].clone(),
                probabilities,
                iteration,
                truth: episode.ground_truth(row),
            }
        })
        .collect();

    Ok(PredictionReport::new(
        episode.class_names().to_vec(),
        *config,
        predictions,
        trace,
    ))
}

/// Expected number of iterations for `queries` unlabeled after bootstrap.
pub fn expected_iterations(queries: usize, batch: usize) -> usize {
    queries.div_ceil(batch)
}

/// Checks the structural invariants of a finished run: labels are written
/// once, committed finalists are never harder than uncommitted ones, evidence
/// grows by the clamped batch size, and the iteration count matches.
pub fn verify_trace(report: &PredictionReport) -> Result<()> {
    let fail = |msg: String| Err(GmlError::TraceViolation(msg));
    let cfg = &report.config;
    let trace = &report.trace;
    let queries = report.predictions.len();
    let mut labeled: HashSet<&str> = trace.bootstrap.iter().map(|b| b.id.as_str()).collect();
    if labeled.len() != trace.bootstrap.len() {
        return fail("duplicate bootstrap label".into());
    }
    let mut remaining = queries - labeled.len();
    if trace.iterations.len() != expected_iterations(remaining, cfg.batch) {
        return fail(format!(
            "{} iterations for {remaining} queries at batch {}",
            trace.iterations.len(),
            cfg.batch
        ));
    }
    for (i, it) in trace.iterations.iter().enumerate() {
        if it.iteration != i + 1 {
            return fail(format!("iteration index {} at position {i}", it.iteration));
        }
        if it.unlabeled != remaining {
            return fail(format!("iteration {}: {} unlabeled, expected {remaining}", it.iteration, it.unlabeled));
        }
        if let Some(c) = it.candidates.iter().find(|c| labeled.contains(c.id.as_str())) {
            return fail(format!("iteration {}: labeled `{}` reappears as candidate", it.iteration, c.id));
        }
        let expected = cfg.batch.min(remaining);
        if it.committed.len() != expected {
            return fail(format!(
                "iteration {}: committed {} labels, expected {expected}",
                it.iteration,
                it.committed.len()
            ));
        }
        let committed: HashSet<&str> = it.committed.iter().map(|c| c.id.as_str()).collect();
        let finalist_ids: HashSet<&str> = it.finalists.iter().map(|f| f.id.as_str()).collect();
        let candidate_ids: HashSet<&str> = it.candidates.iter().map(|c| c.id.as_str()).collect();
        if !committed.is_subset(&finalist_ids) || !finalist_ids.is_subset(&candidate_ids) {
            return fail(format!("iteration {}: commits/finalists/candidates not nested", it.iteration));
        }
        let worst_committed = it.committed.iter().map(|c| c.entropy).fold(f64::NEG_INFINITY, f64::max);
        let best_left = it
            .finalists
            .iter()
            .filter(|f| !committed.contains(f.id.as_str()))
            .map(|f| f.exact_entropy)
            .fold(f64::INFINITY, f64::min);
        if worst_committed > best_left {
            return fail(format!(
                "iteration {}: committed entropy {worst_committed} exceeds uncommitted {best_left}",
                it.iteration
            ));
        }
        for c in &it.committed {
            if top_class(&c.probabilities).0 != c.label {
                return fail(format!("iteration {}: `{}` label is not the argmax", it.iteration, c.id));
            }
            if !labeled.insert(c.id.as_str()) {
                return fail(format!("`{}` labeled twice", c.id));
            }
        }
        remaining -= it.committed.len();
    }
    if remaining != 0 {
        return fail(format!("{remaining} queries left unlabeled"));
    }
    for p in &report.predictions {
        if !labeled.contains(p.id.as_str()) {
            return fail(format!("prediction for `{}` has no trace entry", p.id));
        }
        let total: f64 = p.probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return fail(format!("probabilities of `{}` sum to {total}", p.id));
        }
        let committed_at = trace
            .iterations
            .iter()
            .find(|it| it.committed.iter().any(|c| c.id == p.id))
            .map_or(0, |it| it.iteration);
        if committed_at != p.iteration {
            return fail(format!("`{}` reported at iteration {} but committed at {committed_at}", p.id, p.iteration));
        }
    }
    Ok(())
}
