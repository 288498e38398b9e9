//! The episode factor graph.
//!
//! One variable per sample; per variable, one unary CCD factor for every
//! (backbone, class); one binary KNN factor per neighbor edge per backbone. A
//! unary factor contributes `exp(w)` when the variable takes the factor's class,
//! a binary factor contributes `exp(w)` when both endpoints share a label.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::episode::Episode;
use crate::error::{GmlError, Result};
use crate::features::{ccd, preprocess, CentroidSet, KnnEdge};
use crate::influence::{
    binary_weight, confidence_theta, fit_sigmoid, unary_weight, Direction, FitOptions, FitState,
    SigmoidParams, PROB_EPS,
};
use crate::matrix::Matrix;

/// Steepness magnitude used whenever a family cannot be fitted.
pub const DEFAULT_TAU: f64 = 10.0;

/// Largest number of inference variables [`brute_force_joint`] will enumerate.
pub const BRUTE_FORCE_CAP: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VariableStatus {
    Evidence(usize),
    Inference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub id: String,
    pub status: VariableStatus,
    /// CCD value per `backbone * ways + class`.
    pub ccd: Vec<f64>,
    pub unary: Vec<usize>,
    pub binary: Vec<usize>,
}

impl Variable {
    pub fn label(&self) -> Option<usize> {
        match self.status {
            VariableStatus::Evidence(c) => Some(c),
            VariableStatus::Inference => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactorKind {
    UnaryCcd { backbone: usize, class: usize },
    BinaryKnn { backbone: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Endpoints {
    Unary(usize),
    Binary(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub kind: FactorKind,
    pub endpoints: Endpoints,
    /// CCD distance for unary factors, cosine similarity for binary ones.
    pub value: f64,
}

/// Granularity of the CCD influence models.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CcdFamilies {
    /// One sigmoid per backbone, shared by all classes.
    #[default]
    PerBackbone,
    /// One sigmoid per (backbone, class).
    PerClass,
}

/// Fitted influence models for every feature family of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct FitRegistry {
    ways: usize,
    families: CcdFamilies,
    ccd: Vec<FitState>,
    knn: Vec<FitState>,
}

impl FitRegistry {
    /// Assembles a registry from explicit fits. `ccd` holds one fit per
    /// backbone, or one per `backbone * ways + class` for per-class families.
    pub fn from_parts(
        ways: usize,
        families: CcdFamilies,
        ccd: Vec<FitState>,
        knn: Vec<FitState>,
    ) -> Result<Self> {
        let expected = match families {
            CcdFamilies::PerBackbone => knn.len(),
            CcdFamilies::PerClass => knn.len() * ways,
        };
        if ways == 0 || ccd.len() != expected {
            return Err(GmlError::Inconsistent(format!(
                "{} CCD fits for {} backbones and {ways} ways",
                ccd.len(),
                knn.len()
            )));
        }
        Ok(FitRegistry {
            ways,
            families,
            ccd,
            knn,
        })
    }

    pub fn families(&self) -> CcdFamilies {
        self.families
    }

    pub fn ccd(&self, backbone: usize, class: usize) -> &FitState {
        match self.families {
            CcdFamilies::PerBackbone => &self.ccd[backbone],
            CcdFamilies::PerClass => &self.ccd[backbone * self.ways + class],
        }
    }

    pub fn knn(&self, backbone: usize) -> &FitState {
        &self.knn[backbone]
    }

    /// Compact parameter summary, CCD families first.
    pub fn snapshot(&self) -> Vec<FitSnapshot> {
        let ccd = self.ccd.iter().enumerate().map(|(i, f)| {
            let name = match self.families {
                CcdFamilies::PerBackbone => format!("ccd/b{i}"),
                CcdFamilies::PerClass => format!("ccd/b{}/c{}", i / self.ways, i % self.ways),
            };
            FitSnapshot::of(name, f)
        });
        let knn = self
            .knn
            .iter()
            .enumerate()
            .map(|(b, f)| FitSnapshot::of(format!("knn/b{b}"), f));
        ccd.chain(knn).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSnapshot {
    pub family: String,
    pub alpha: f64,
    pub tau: f64,
    pub pairs: usize,
    pub trusted: bool,
}

impl FitSnapshot {
    fn of(family: String, fit: &FitState) -> Self {
        FitSnapshot {
            family,
            alpha: fit.params.alpha,
            tau: fit.params.tau,
            pairs: fit.pairs.len(),
            trusted: fit.trusted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnaryTerm {
    pub backbone: usize,
    pub class: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryTerm {
    pub backbone: usize,
    pub neighbor: usize,
    pub neighbor_label: usize,
    pub value: f64,
}

/// An unlabeled variable with its unary factors and the binary factors that
/// link it to evidence variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Subgraph {
    pub variable: usize,
    pub ways: usize,
    pub unary: Vec<UnaryTerm>,
    pub binary: Vec<BinaryTerm>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorGraph {
    ways: usize,
    backbones: usize,
    variables: Vec<Variable>,
    factors: Vec<Factor>,
    ccd_default_alpha: Vec<f64>,
    knn_default_alpha: Vec<f64>,
}

/// Builds the factor graph of an episode. `evidence` maps sample rows to
/// labels and must contain at least every support sample.
pub fn build_graph(
    episode: &Episode,
    centroids: &CentroidSet,
    knn_edges: &[Vec<KnnEdge>],
    evidence: &BTreeMap<usize, usize>,
) -> Result<FactorGraph> {
    let (ways, backbones, n) = (episode.ways(), episode.backbone_count(), episode.sample_count());
    if centroids.centroids.len() != backbones || knn_edges.len() != backbones {
        return Err(GmlError::Inconsistent(format!(
            "{} centroid sets and {} edge sets for {backbones} backbones",
            centroids.centroids.len(),
            knn_edges.len()
        )));
    }
    if centroids.centroids.iter().any(|c| c.rows() != ways) {
        return Err(GmlError::Inconsistent("centroid count differs from ways".into()));
    }
    for (&row, &label) in evidence {
        if row >= n || label >= ways {
            return Err(GmlError::Inconsistent(format!(
                "evidence ({row}, {label}) out of range"
            )));
        }
        if let Some(s) = episode.support_label(row) {
            if s != label {
                return Err(GmlError::Inconsistent(format!(
                    "evidence label {label} contradicts support label {s} of `{}`",
                    episode.sample_id(row)
                )));
            }
        }
    }
    if let Some((row, _)) = episode.support_rows().into_iter().find(|(r, _)| !evidence.contains_key(r)) {
        return Err(GmlError::Inconsistent(format!(
            "support sample `{}` missing from evidence",
            episode.sample_id(row)
        )));
    }

    let normalized = episode
        .embeddings()
        .iter()
        .map(preprocess)
        .collect::<Result<Vec<_>>>()?;

    let mut variables = Vec::with_capacity(n);
    let mut factors = Vec::with_capacity(n * ways * backbones);
    for row in 0..n {
        let mut values = Vec::with_capacity(ways * backbones);
        let mut unary = Vec::with_capacity(ways * backbones);
        for b in 0..backbones {
            for c in 0..ways {
                let x = ccd(normalized[b].row(row), centroids.centroid(b, c))?;
                values.push(x);
                unary.push(factors.len());
                factors.push(Factor {
                    kind: FactorKind::UnaryCcd { backbone: b, class: c },
                    endpoints: Endpoints::Unary(row),
                    value: x,
                });
            }
        }
        variables.push(Variable {
            id: episode.sample_id(row).to_string(),
            status: evidence
                .get(&row)
                .map_or(VariableStatus::Inference, |&c| VariableStatus::Evidence(c)),
            ccd: values,
            unary,
            binary: Vec::new(),
        });
    }

    let mut knn_default_alpha = Vec::with_capacity(backbones);
    for (b, edges) in knn_edges.iter().enumerate() {
        let mut sims = Vec::with_capacity(edges.len());
        for e in edges {
            if e.source == e.target || e.source >= n || e.target >= n {
                return Err(GmlError::Inconsistent(format!(
                    "bad KNN edge ({}, {}) in backbone {b}",
                    e.source, e.target
                )));
            }
            let id = factors.len();
            factors.push(Factor {
                kind: FactorKind::BinaryKnn { backbone: b },
                endpoints: Endpoints::Binary(e.source, e.target),
                value: e.similarity,
            });
            variables[e.source].binary.push(id);
            variables[e.target].binary.push(id);
            sims.push(e.similarity);
        }
        knn_default_alpha.push(median(&mut sims).unwrap_or(0.5));
    }

    let mut graph = FactorGraph {
        ways,
        backbones,
        variables,
        factors,
        ccd_default_alpha: Vec::new(),
        knn_default_alpha,
    };
    graph.refresh_ccd_defaults();
    Ok(graph)
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len().is_multiple_of(2) {
        0.5 * (values[mid - 1] + values[mid])
    } else {
        values[mid]
    })
}

impl FactorGraph {
    pub fn ways(&self) -> usize {
        self.ways
    }

    pub fn backbones(&self) -> usize {
        self.backbones
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, v: usize) -> &Variable {
        &self.variables[v]
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn unary_count(&self) -> usize {
        self.factors
            .iter()
            .filter(|f| matches!(f.kind, FactorKind::UnaryCcd { .. }))
            .count()
    }

    pub fn binary_count(&self) -> usize {
        self.factors.len() - self.unary_count()
    }

    pub fn label(&self, v: usize) -> Option<usize> {
        self.variables[v].label()
    }

    /// Unlabeled variables in ascending index order.
    pub fn inference_variables(&self) -> Vec<usize> {
        (0..self.variables.len())
            .filter(|&v| self.variables[v].label().is_none())
            .collect()
    }

    pub fn evidence_count(&self) -> usize {
        self.variables.iter().filter(|v| v.label().is_some()).count()
    }

    /// `(row, label)` of every evidence variable in index order.
    pub fn evidence(&self) -> Vec<(usize, usize)> {
        self.variables
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.label().map(|c| (i, c)))
            .collect()
    }

    /// Turns an inference variable into evidence.
    ///
    /// Panics if `v` is already labeled: evidence labels are write-once.
    pub fn commit_label(&mut self, v: usize, label: usize) {
        assert!(label < self.ways, "label {label} out of range");
        match self.variables[v].status {
            VariableStatus::Inference => self.variables[v].status = VariableStatus::Evidence(label),
            VariableStatus::Evidence(old) => panic!(
                "attempted to relabel evidence variable `{}` ({old} -> {label})",
                self.variables[v].id
            ),
        }
    }

    /// Recomputes every CCD value against new centroids.
    pub fn update_ccd(&mut self, normalized: &[Matrix], centroids: &CentroidSet) -> Result<()> {
        for (row, var) in self.variables.iter_mut().enumerate() {
            for b in 0..self.backbones {
                for c in 0..self.ways {
                    let x = ccd(normalized[b].row(row), centroids.centroid(b, c))?;
                    let slot = b * self.ways + c;
                    var.ccd[slot] = x;
                    self.factors[var.unary[slot]].value = x;
                }
            }
        }
        self.refresh_ccd_defaults();
        Ok(())
    }

    fn refresh_ccd_defaults(&mut self) {
        let count = (self.variables.len() * self.ways).max(1) as f64;
        self.ccd_default_alpha = (0..self.backbones)
            .map(|b| {
                let sum: f64 = self
                    .variables
                    .iter()
                    .flat_map(|v| &v.ccd[b * self.ways..(b + 1) * self.ways])
                    .sum();
                sum / count
            })
            .collect();
    }

    pub fn ccd_default(&self, backbone: usize) -> SigmoidParams {
        SigmoidParams {
            alpha: self.ccd_default_alpha[backbone],
            tau: -DEFAULT_TAU,
            direction: Direction::Decreasing,
        }
    }

    pub fn knn_default(&self, backbone: usize) -> SigmoidParams {
        SigmoidParams {
            alpha: self.knn_default_alpha[backbone],
            tau: DEFAULT_TAU,
            direction: Direction::Increasing,
        }
    }

    /// Fits every feature family on the current evidence.
    ///
    /// CCD pairs are (distance of an evidence variable to centroid c,
    /// [label == c]); per-backbone families pool the pairs of every class.
    /// KNN family b: pairs (similarity, [same label]) over edges whose
    /// endpoints are both evidence.
    pub fn fit_all(&self, families: CcdFamilies, opts: &FitOptions) -> FitRegistry {
        let evidence = self.evidence();
        let ccd_pairs = |b: usize, classes: std::ops::Range<usize>| -> Vec<(f64, f64)> {
            evidence
                .iter()
                .flat_map(|&(v, label)| classes.clone().map(move |c| (v, label, c)))
                .map(|(v, label, c)| (self.variables[v].ccd[b * self.ways + c], (label == c) as u8 as f64))
                .collect()
        };
        let mut ccd = Vec::with_capacity(self.backbones * self.ways);
        for b in 0..self.backbones {
            match families {
                CcdFamilies::PerBackbone => {
                    let pairs = ccd_pairs(b, 0..self.ways);
                    ccd.push(fit_sigmoid(&pairs, Direction::Decreasing, self.ccd_default(b), opts));
                }
                CcdFamilies::PerClass => {
                    for c in 0..self.ways {
                        let pairs = ccd_pairs(b, c..c + 1);
                        ccd.push(fit_sigmoid(&pairs, Direction::Decreasing, self.ccd_default(b), opts));
                    }
                }
            }
        }
        let mut pairs_per_backbone = vec![Vec::new(); self.backbones];
        for f in &self.factors {
            if let (FactorKind::BinaryKnn { backbone }, Endpoints::Binary(i, j)) = (f.kind, f.endpoints) {
                if let (Some(a), Some(b)) = (self.label(i), self.label(j)) {
                    pairs_per_backbone[backbone].push((f.value, (a == b) as u8 as f64));
                }
            }
        }
        let knn = pairs_per_backbone
            .iter()
            .enumerate()
            .map(|(b, pairs)| fit_sigmoid(pairs, Direction::Increasing, self.knn_default(b), opts))
            .collect();
        FitRegistry {
            ways: self.ways,
            families,
            ccd,
            knn,
        }
    }

    /// Inference subgraph of an unlabeled variable.
    pub fn subgraph(&self, v: usize) -> Result<Subgraph> {
        let var = &self.variables[v];
        if var.label().is_some() {
            return Err(GmlError::AlreadyLabeled(v));
        }
        let unary = var
            .unary
            .iter()
            .map(|&f| match self.factors[f].kind {
                FactorKind::UnaryCcd { backbone, class } => UnaryTerm {
                    backbone,
                    class,
                    value: self.factors[f].value,
                },
                FactorKind::BinaryKnn { .. } => unreachable!("unary list holds CCD factors"),
            })
            .collect();
        let mut binary: Vec<BinaryTerm> = var
            .binary
            .iter()
            .filter_map(|&f| {
                let factor = &self.factors[f];
                let (FactorKind::BinaryKnn { backbone }, Endpoints::Binary(i, j)) =
                    (factor.kind, factor.endpoints)
                else {
                    unreachable!("binary list holds KNN factors")
                };
                let neighbor = if i == v { j } else { i };
                self.label(neighbor).map(|neighbor_label| BinaryTerm {
                    backbone,
                    neighbor,
                    neighbor_label,
                    value: factor.value,
                })
            })
            .collect();
        binary.sort_by_key(|t| (t.backbone, t.neighbor));
        Ok(Subgraph {
            variable: v,
            ways: self.ways,
            unary,
            binary,
        })
    }
}

/// Unnormalized log-probability of each class for the subgraph's variable.
pub fn class_scores(sub: &Subgraph, fits: &FitRegistry) -> Vec<f64> {
    let mut scores = vec![0.0; sub.ways];
    for t in &sub.unary {
        let fit = fits.ccd(t.backbone, t.class);
        scores[t.class] += unary_weight(confidence_theta(fit, t.value), &fit.params, t.value);
    }
    for t in &sub.binary {
        let fit = fits.knn(t.backbone);
        scores[t.neighbor_label] += binary_weight(confidence_theta(fit, t.value), &fit.params, t.value);
    }
    scores
}

/// Class marginal of the subgraph's variable.
pub fn infer_marginal(sub: &Subgraph, fits: &FitRegistry) -> Vec<f64> {
    softmax(&class_scores(sub, fits))
}

/// Max-subtracted softmax followed by [`clamp_probabilities`].
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    clamp_probabilities(exp.into_iter().map(|e| e / total).collect())
}

/// Pulls a distribution into `[PROB_EPS, 1 - PROB_EPS]` while keeping it
/// normalized, by mixing in the smallest sufficient share of the uniform
/// distribution.
pub fn clamp_probabilities(mut p: Vec<f64>) -> Vec<f64> {
    let n = p.len();
    if n < 2 {
        return p;
    }
    let uniform = 1.0 / n as f64;
    let min = p.iter().copied().fold(f64::INFINITY, f64::min);
    if min < PROB_EPS {
        let lambda = (PROB_EPS - min) / (uniform - min);
        for v in &mut p {
            *v = ((1.0 - lambda) * *v + lambda * uniform).max(PROB_EPS);
        }
    }
    p
}

/// Normalized distribution over every joint assignment of the inference
/// variables of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    pub ways: usize,
    /// Inference variables in graph order; slot `s` of an assignment labels `variables[s]`.
    pub variables: Vec<usize>,
    pub assignments: Vec<Vec<usize>>,
    pub probabilities: Vec<f64>,
}

impl JointDistribution {
    /// Unclamped class marginal of the variable in `slot`.
    pub fn marginal(&self, slot: usize) -> Vec<f64> {
        let mut m = vec![0.0; self.ways];
        for (a, p) in self.assignments.iter().zip(&self.probabilities) {
            m[a[slot]] += p;
        }
        m
    }

    /// Probability that the variables in two slots share a label.
    pub fn same_label(&self, s: usize, t: usize) -> f64 {
        self.assignments
            .iter()
            .zip(&self.probabilities)
            .filter(|(a, _)| a[s] == a[t])
            .map(|(_, p)| p)
            .sum()
    }
}

/// Enumerates all joint assignments of the inference variables against the
/// full factor product.
pub fn joint_distribution(graph: &FactorGraph, fits: &FitRegistry) -> Result<JointDistribution> {
    let free = graph.inference_variables();
    if free.len() > BRUTE_FORCE_CAP {
        return Err(GmlError::TooManyVariables {
            count: free.len(),
            max: BRUTE_FORCE_CAP,
        });
    }
    let ways = graph.ways();
    let mut slot_of = vec![usize::MAX; graph.variables().len()];
    for (s, &v) in free.iter().enumerate() {
        slot_of[v] = s;
    }
    let total = ways.pow(free.len() as u32);
    let mut log_weights = Vec::with_capacity(total);
    let mut assignments = Vec::with_capacity(total);
    for code in 0..total {
        let mut rest = code;
        let assignment: Vec<usize> = free
            .iter()
            .map(|_| {
                let a = rest % ways;
                rest /= ways;
                a
            })
            .collect();
        let label_of = |v: usize| graph.label(v).unwrap_or_else(|| assignment[slot_of[v]]);
        let mut log_w = 0.0;
        for f in graph.factors() {
            match (f.kind, f.endpoints) {
                (FactorKind::UnaryCcd { backbone, class }, Endpoints::Unary(v)) => {
                    if label_of(v) == class {
                        let fit = fits.ccd(backbone, class);
                        log_w += unary_weight(confidence_theta(fit, f.value), &fit.params, f.value);
                    }
                }
                (FactorKind::BinaryKnn { backbone }, Endpoints::Binary(i, j)) => {
                    if label_of(i) == label_of(j) {
                        let fit = fits.knn(backbone);
                        log_w += binary_weight(confidence_theta(fit, f.value), &fit.params, f.value);
                    }
                }
                _ => unreachable!("factor kind and arity always agree"),
            }
        }
        log_weights.push(log_w);
        assignments.push(assignment);
    }
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_weights.iter().map(|lw| (lw - max).exp()).collect();
    let z: f64 = weights.iter().sum();
    Ok(JointDistribution {
        ways,
        variables: free,
        assignments,
        probabilities: weights.into_iter().map(|w| w / z).collect(),
    })
}

/// Exact marginals of every inference variable by enumerating all joint
/// assignments. Evidence variables map to `None`. Test oracle for
/// [`infer_marginal`].
pub fn brute_force_joint(graph: &FactorGraph, fits: &FitRegistry) -> Result<Vec<Option<Vec<f64>>>> {
    let joint = joint_distribution(graph, fits)?;
    let mut out = vec![None; graph.variables().len()];
    for (s, &v) in joint.variables.iter().enumerate() {
        out[v] = Some(clamp_probabilities(joint.marginal(s)));
    }
    Ok(out)
}
