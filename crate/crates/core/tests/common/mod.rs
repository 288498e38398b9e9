#![allow(dead_code)]

use std::collections::BTreeMap;

use gml_core::episode::{BackboneSpec, EPISODE_FORMAT};
use gml_core::influence::{fit_sigmoid, Direction, FitOptions, FitState, SigmoidParams};
use gml_core::{Episode, EpisodeManifest, Matrix};

/// Builds an episode from explicit rows. Each entry of `backbones` lists the
/// rows of one embedding space: `ways * shots` support rows in class order,
/// then one row per entry of `query_truth`.
pub fn episode(ways: usize, shots: usize, query_truth: &[usize], backbones: &[Vec<Vec<f64>>]) -> Episode {
    let mut sample_ids = Vec::new();
    let mut support_labels = BTreeMap::new();
    for c in 0..ways {
        for j in 0..shots {
            let id = format!("s{c}_{j}");
            support_labels.insert(id.clone(), format!("c{c}"));
            sample_ids.push(id);
        }
    }
    let mut query_ids = Vec::new();
    let mut ground_truth = BTreeMap::new();
    for (i, &c) in query_truth.iter().enumerate() {
        let id = format!("q{i:03}");
        ground_truth.insert(id.clone(), format!("c{c}"));
        sample_ids.push(id.clone());
        query_ids.push(id);
    }
    assert_eq!(query_truth.len() % ways, 0, "query count must be a multiple of ways");
    let dims: Vec<usize> = backbones.iter().map(|rows| rows[0].len()).collect();
    let manifest = EpisodeManifest {
        format: EPISODE_FORMAT.into(),
        ways,
        shots,
        query_count: query_truth.len() / ways,
        classes: (0..ways).map(|c| format!("c{c}")).collect(),
        backbones: dims
            .iter()
            .enumerate()
            .map(|(b, &dim)| BackboneSpec {
                name: format!("b{b}"),
                dim,
                data_file: format!("b{b}.csv"),
            })
            .collect(),
        sample_ids,
        support_labels,
        query_ids,
        ground_truth: Some(ground_truth),
    };
    let matrices = backbones
        .iter()
        .map(|rows| Matrix::from_rows(rows).expect("rectangular rows"))
        .collect();
    Episode::new(manifest, matrices).expect("valid test episode")
}

/// Fit of a family whose pairs lie on a line, so the confidence is 1 everywhere.
pub fn linear_fit(direction: Direction) -> FitState {
    let pairs: Vec<(f64, f64)> = (0..=10)
        .map(|i| {
            let x = i as f64 / 10.0;
            (x, if direction == Direction::Increasing { x } else { 1.0 - x })
        })
        .collect();
    let tau = if direction == Direction::Increasing { 10.0 } else { -10.0 };
    let default = SigmoidParams::new(0.5, tau, direction).unwrap();
    fit_sigmoid(&pairs, direction, default, &FitOptions::default())
}
