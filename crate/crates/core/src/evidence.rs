//! Dempster-Shafer evidential support over the frame of class labels.
//!
//! Focal elements are restricted to class singletons and the whole frame
//! (ignorance), which keeps combination linear in the number of classes.

use serde::{Deserialize, Serialize};

use crate::graph::{FactorGraph, FitRegistry, Subgraph};
use crate::influence::{confidence_theta, sigmoid_eval, Confidence};

const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassFunction {
    singleton: Vec<f64>,
    ignorance: f64,
}

impl MassFunction {
    pub fn vacuous(ways: usize) -> Self {
        MassFunction {
            singleton: vec![0.0; ways],
            ignorance: 1.0,
        }
    }

    /// Mass `mass` on `{class}`, the rest on ignorance.
    pub fn simple(ways: usize, class: usize, mass: f64) -> Self {
        let mass = mass.clamp(0.0, 1.0);
        let mut singleton = vec![0.0; ways];
        singleton[class] = mass;
        MassFunction {
            singleton,
            ignorance: 1.0 - mass,
        }
    }

    /// Returns `None` unless all masses are non-negative and sum to one.
    pub fn new(singleton: Vec<f64>, ignorance: f64) -> Option<Self> {
        let m = MassFunction {
            singleton,
            ignorance,
        };
        m.is_valid().then_some(m)
    }

    pub fn ways(&self) -> usize {
        self.singleton.len()
    }

    pub fn singleton(&self, class: usize) -> f64 {
        self.singleton[class]
    }

    pub fn singletons(&self) -> &[f64] {
        &self.singleton
    }

    pub fn ignorance(&self) -> f64 {
        self.ignorance
    }

    pub fn is_valid(&self) -> bool {
        let total: f64 = self.singleton.iter().sum::<f64>() + self.ignorance;
        self.ignorance >= 0.0
            && self.singleton.iter().all(|&m| m >= 0.0)
            && (total - 1.0).abs() <= MASS_TOLERANCE
    }

    /// Largest singleton mass and its class (lowest index on ties).
    pub fn top(&self) -> (usize, f64) {
        self.singleton
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (c, &m)| if m > best.1 { (c, m) } else { best })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Combination {
    pub mass: MassFunction,
    pub conflict: f64,
    /// Set when the sources were in total conflict and nothing could be kept.
    pub contradicted: bool,
}

/// Dempster's rule restricted to singletons plus the full frame.
pub fn dempster_combine(m1: &MassFunction, m2: &MassFunction) -> Combination {
    assert_eq!(m1.ways(), m2.ways(), "mass functions over different frames");
    let total1: f64 = m1.singleton.iter().sum();
    let total2: f64 = m2.singleton.iter().sum();
    let agree: f64 = m1.singleton.iter().zip(&m2.singleton).map(|(a, b)| a * b).sum();
    let conflict = (total1 * total2 - agree).max(0.0);
    let norm = 1.0 - conflict;
    if norm <= f64::EPSILON {
        return Combination {
            mass: MassFunction::vacuous(m1.ways()),
            conflict,
            contradicted: true,
        };
    }
    let singleton = m1
        .singleton
        .iter()
        .zip(&m2.singleton)
        .map(|(a, b)| (a * b + a * m2.ignorance + m1.ignorance * b) / norm)
        .collect();
    Combination {
        mass: MassFunction {
            singleton,
            ignorance: m1.ignorance * m2.ignorance / norm,
        },
        conflict,
        contradicted: false,
    }
}

/// Mass contributed by one feature: `theta * max(0, 2p - 1)` on the class the
/// feature points to, the remainder on ignorance. `target = None` (a KNN edge to
/// an unlabeled neighbor) yields the vacuous mass.
pub fn feature_mass(ways: usize, target: Option<usize>, p: f64, theta: Confidence) -> MassFunction {
    match target {
        Some(c) => MassFunction::simple(ways, c, theta.theta() * (2.0 * p - 1.0).max(0.0)),
        None => MassFunction::vacuous(ways),
    }
}

/// Folds masses left to right; a total conflict anywhere marks the result.
pub fn combine_all<'a>(ways: usize, masses: impl IntoIterator<Item = &'a MassFunction>) -> Combination {
    let mut acc = Combination {
        mass: MassFunction::vacuous(ways),
        conflict: 0.0,
        contradicted: false,
    };
    for m in masses {
        let next = dempster_combine(&acc.mass, m);
        acc = Combination {
            contradicted: acc.contradicted || next.contradicted,
            ..next
        };
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvidentialSupport {
    pub variable: usize,
    pub mass: MassFunction,
    /// Belief in the top class; 0 for contradicted variables.
    pub score: f64,
    pub contradicted: bool,
}

/// Per-feature masses of an unlabeled variable's subgraph, CCD features first
/// by (backbone, class), then KNN edges by (backbone, neighbor).
pub fn subgraph_masses(sub: &Subgraph, fits: &FitRegistry) -> Vec<MassFunction> {
    let ways = sub.ways;
    let mut out = Vec::with_capacity(sub.unary.len() + sub.binary.len());
    for term in &sub.unary {
        let fit = fits.ccd(term.backbone, term.class);
        let p = sigmoid_eval(&fit.params, term.value);
        out.push(feature_mass(ways, Some(term.class), p, confidence_theta(fit, term.value)));
    }
    for term in &sub.binary {
        let fit = fits.knn(term.backbone);
        let p = sigmoid_eval(&fit.params, term.value);
        out.push(feature_mass(
            ways,
            Some(term.neighbor_label),
            p,
            confidence_theta(fit, term.value),
        ));
    }
    out
}

pub fn evidential_support(graph: &FactorGraph, variable: usize, fits: &FitRegistry) -> EvidentialSupport {
    let sub = graph
        .subgraph(variable)
        .expect("evidential support is only measured for unlabeled variables");
    let masses = subgraph_masses(&sub, fits);
    let combined = combine_all(graph.ways(), &masses);
    let score = if combined.contradicted {
        0.0
    } else {
        combined.mass.top().1.max(0.0)
    };
    EvidentialSupport {
        variable,
        mass: combined.mass,
        score,
        contradicted: combined.contradicted,
    }
}
