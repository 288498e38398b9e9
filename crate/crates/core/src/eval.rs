//! Multi-episode evaluation: gradual inference against the nearest-centroid
//! baseline, summarized as means with 95% confidence half-widths.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::nearest_centroid_accuracy;
use crate::episode::{generate_synthetic, Episode, PredictionReport, SynthParams};
use crate::error::{GmlError, Result};
use crate::inference::{gradual_inference, verify_trace, InferenceConfig};

pub const SUMMARY_FORMAT: &str = "gml-eval/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub id: String,
    pub accuracy: f64,
    pub baseline_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_count: Option<usize>,
    pub episode_count: usize,
    pub mean_accuracy: f64,
    pub ci_half_width: f64,
    pub baseline_mean_accuracy: f64,
    pub baseline_ci_half_width: f64,
    /// Mean of per-episode (GML - baseline) accuracy differences.
    pub mean_gap: f64,
    pub gap_ci_half_width: f64,
    /// Sorted by episode id.
    pub episodes: Vec<EpisodeResult>,
}

/// Mean and `1.96 * stddev / sqrt(count)` using the sample standard
/// deviation; the half-width is 0 for fewer than two values.
pub fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * var.sqrt() / (n as f64).sqrt())
}

impl EvalSummary {
    pub fn from_results(query_count: Option<usize>, mut episodes: Vec<EpisodeResult>) -> Self {
        episodes.sort_by(|a, b| a.id.cmp(&b.id));
        let gml: Vec<f64> = episodes.iter().map(|e| e.accuracy).collect();
        let base: Vec<f64> = episodes.iter().map(|e| e.baseline_accuracy).collect();
        let gap: Vec<f64> = gml.iter().zip(&base).map(|(a, b)| a - b).collect();
        let (mean_accuracy, ci_half_width) = mean_ci(&gml);
        let (baseline_mean_accuracy, baseline_ci_half_width) = mean_ci(&base);
        let (mean_gap, gap_ci_half_width) = mean_ci(&gap);
        EvalSummary {
            query_count,
            episode_count: episodes.len(),
            mean_accuracy,
            ci_half_width,
            baseline_mean_accuracy,
            baseline_ci_half_width,
            mean_gap,
            gap_ci_half_width,
            episodes,
        }
    }

    /// True when every aggregate matches a recomputation from `episodes`.
    pub fn is_consistent(&self) -> bool {
        let again = EvalSummary::from_results(self.query_count, self.episodes.clone());
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 || (a.is_nan() && b.is_nan());
        again.episode_count == self.episode_count
            && again.episodes == self.episodes
            && close(again.mean_accuracy, self.mean_accuracy)
            && close(again.ci_half_width, self.ci_half_width)
            && close(again.baseline_mean_accuracy, self.baseline_mean_accuracy)
            && close(again.baseline_ci_half_width, self.baseline_ci_half_width)
            && close(again.mean_gap, self.mean_gap)
            && close(again.gap_ci_half_width, self.gap_ci_half_width)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub id: String,
    pub report: PredictionReport,
    pub baseline_accuracy: f64,
}

/// Runs one episode through both methods and checks the trace invariants.
pub fn evaluate_episode(id: &str, episode: &Episode, config: &InferenceConfig) -> Result<EpisodeOutcome> {
    let report = gradual_inference(episode, config)?;
    verify_trace(&report).map_err(|e| GmlError::TraceViolation(format!("episode `{id}`: {e}")))?;
    let baseline_accuracy = nearest_centroid_accuracy(episode)?;
    match (report.accuracy, baseline_accuracy) {
        (Some(_), Some(baseline_accuracy)) => Ok(EpisodeOutcome {
            id: id.to_string(),
            report,
            baseline_accuracy,
        }),
        _ => Err(GmlError::Manifest(format!("episode `{id}` has no ground truth to score"))),
    }
}

/// Evaluates `count` episodes produced on demand by `make`, on up to `jobs`
/// threads (0 picks the rayon default). Output is sorted by episode id and does
/// not depend on the thread count.
pub fn evaluate_with<F>(
    count: usize,
    make: F,
    config: &InferenceConfig,
    jobs: usize,
    query_count: Option<usize>,
) -> Result<(EvalSummary, Vec<EpisodeOutcome>)>
where
    F: Fn(usize) -> Result<(String, Episode)> + Sync,
{
    if count == 0 {
        return Err(GmlError::InvalidParameter("no episodes to evaluate".into()));
    }
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| GmlError::InvalidParameter(format!("thread pool: {e}")))?;
    let mut outcomes = pool.install(|| {
        (0..count)
            .into_par_iter()
            .map(|i| {
                let (id, episode) = make(i)?;
                evaluate_episode(&id, &episode, config)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    outcomes.sort_by(|a, b| a.id.cmp(&b.id));
    let results = outcomes
        .iter()
        .map(|o| EpisodeResult {
            id: o.id.clone(),
            accuracy: o.report.accuracy.expect("scored above"),
            baseline_accuracy: o.baseline_accuracy,
        })
        .collect();
    Ok((EvalSummary::from_results(query_count, results), outcomes))
}

/// Episode `i` of a synthetic suite uses seed `params.seed + i`.
pub fn synthetic_episode(params: &SynthParams, i: usize) -> Result<(String, Episode)> {
    let seed = params.seed.wrapping_add(i as u64);
    let episode = generate_synthetic(&SynthParams { seed, ..*params })?;
    Ok((format!("synth-q{:03}-{seed:06}", params.queries), episode))
}

pub fn evaluate_synthetic(
    params: &SynthParams,
    count: usize,
    config: &InferenceConfig,
    jobs: usize,
) -> Result<(EvalSummary, Vec<EpisodeOutcome>)> {
    params.validate()?;
    evaluate_with(count, |i| synthetic_episode(params, i), config, jobs, Some(params.queries))
}
