//! Sigmoid influence models.
//!
//! A feature value `x` maps to a label probability through
//! `1 / (1 + exp(-tau * (x - alpha)))`. Parameters are learned per feature
//! family by bounded maximum-likelihood logistic regression over evidence,
//! and a separate least-squares prediction interval yields the confidence
//! `theta` that scales factor weights.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{GmlError, Result};

/// Probability clamp applied wherever a probability feeds a log or an inverse.
pub const PROB_EPS: f64 = 1e-6;
pub const TAU_MIN: f64 = 0.01;
pub const TAU_MAX: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Increasing => 1.0,
            Direction::Decreasing => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidParams {
    pub alpha: f64,
    pub tau: f64,
    pub direction: Direction,
}

impl SigmoidParams {
    pub fn new(alpha: f64, tau: f64, direction: Direction) -> Result<Self> {
        let p = SigmoidParams {
            alpha,
            tau,
            direction,
        };
        if !alpha.is_finite() {
            return Err(GmlError::InvalidParameter(format!("alpha must be finite, got {alpha}")));
        }
        if tau.signum() != direction.sign() || !(TAU_MIN..=TAU_MAX).contains(&tau.abs()) {
            return Err(GmlError::InvalidParameter(format!(
                "tau = {tau} inconsistent with {direction:?} direction or outside |tau| in [{TAU_MIN}, {TAU_MAX}]"
            )));
        }
        Ok(p)
    }
}

/// Sigmoid probability clamped to `[PROB_EPS, 1 - PROB_EPS]`.
pub fn sigmoid_eval(params: &SigmoidParams, x: f64) -> f64 {
    logistic(params.tau * (x - params.alpha)).clamp(PROB_EPS, 1.0 - PROB_EPS)
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub tau_min: f64,
    pub tau_max: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            tolerance: 1e-6,
            tau_min: TAU_MIN,
            tau_max: TAU_MAX,
        }
    }
}

/// Least-squares summary of the training pairs, used by [`confidence_theta`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionStats {
    pub n: usize,
    pub mean_x: f64,
    pub sxx: f64,
    pub residual_variance: f64,
    /// Two-sided 95% Student-t quantile with `n - 2` degrees of freedom.
    pub t_quantile: f64,
}

impl RegressionStats {
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Self {
        let n = pairs.len();
        if n == 0 {
            return RegressionStats {
                n,
                mean_x: 0.0,
                sxx: 0.0,
                residual_variance: 0.0,
                t_quantile: f64::INFINITY,
            };
        }
        let nf = n as f64;
        let x0 = pairs[0].0;
        let constant_x = pairs.iter().all(|p| p.0 == x0);
        let mean_x = if constant_x { x0 } else { pairs.iter().map(|p| p.0).sum::<f64>() / nf };
        let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
        let sxx: f64 = if constant_x { 0.0 } else { pairs.iter().map(|p| (p.0 - mean_x).powi(2)).sum() };
        let sxy: f64 = pairs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        let sse: f64 = pairs
            .iter()
            .map(|&(x, y)| (y - mean_y - slope * (x - mean_x)).powi(2))
            .sum();
        let (residual_variance, t_quantile) = if n >= 3 {
            let df = (n - 2) as f64;
            let t = StudentsT::new(0.0, 1.0, df)
                .expect("positive degrees of freedom")
                .inverse_cdf(0.975);
            (sse / df, t)
        } else {
            (0.0, f64::INFINITY)
        };
        RegressionStats {
            n,
            mean_x,
            sxx,
            residual_variance,
            t_quantile,
        }
    }

    /// Half-width of the 95% prediction interval at `x`; `None` when the
    /// regression is undetermined (fewer than 3 pairs or constant `x`).
    pub fn prediction_half_width(&self, x: f64) -> Option<f64> {
        if self.n < 3 || self.sxx <= 0.0 {
            return None;
        }
        let n = self.n as f64;
        let spread = 1.0 + 1.0 / n + (x - self.mean_x).powi(2) / self.sxx;
        Some(self.t_quantile * (self.residual_variance * spread).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitState {
    pub pairs: Vec<(f64, f64)>,
    pub params: SigmoidParams,
    /// False when the family default was used instead of a likelihood fit.
    pub trusted: bool,
    pub iterations: usize,
    pub stats: RegressionStats,
}

/// Fits `p(y = 1 | x)` by bounded maximum likelihood. `y` may be a soft label
/// in `[0, 1]`. Falls back to `default` when the data cannot identify a slope.
pub fn fit_sigmoid(
    pairs: &[(f64, f64)],
    direction: Direction,
    default: SigmoidParams,
    opts: &FitOptions,
) -> FitState {
    let stats = RegressionStats::from_pairs(pairs);
    let untrusted = |params| FitState {
        pairs: pairs.to_vec(),
        params,
        trusted: false,
        iterations: 0,
        stats,
    };
    let default = SigmoidParams {
        direction,
        tau: direction.sign() * default.tau.abs().clamp(opts.tau_min, opts.tau_max),
        ..default
    };
    if pairs.len() < 3 {
        return untrusted(default);
    }
    if stats.sxx <= 0.0 {
        return untrusted(SigmoidParams {
            alpha: pairs[0].0,
            ..default
        });
    }
    let y0 = pairs[0].1;
    if pairs.iter().all(|p| p.1 == y0) {
        return untrusted(default);
    }

    let (lo, hi) = match direction {
        Direction::Increasing => (opts.tau_min, opts.tau_max),
        Direction::Decreasing => (-opts.tau_max, -opts.tau_min),
    };
    let center = stats.mean_x;
    // z = intercept + slope * (x - center); slope is tau.
    let nll = |a: f64, b: f64| -> f64 {
        pairs
            .iter()
            .map(|&(x, y)| {
                let z = a + b * (x - center);
                softplus(z) - y * z
            })
            .sum()
    };

    let mean_y = (pairs.iter().map(|p| p.1).sum::<f64>() / pairs.len() as f64).clamp(0.01, 0.99);
    let mut a = (mean_y / (1.0 - mean_y)).ln();
    let mut b = direction.sign().clamp(lo, hi);
    let mut f = nll(a, b);
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(x, y) in pairs {
            let u = x - center;
            let p = logistic(a + b * u);
            let r = p - y;
            let w = p * (1.0 - p);
            ga += r;
            gb += r * u;
            haa += w;
            hab += w * u;
            hbb += w * u * u;
        }
        let ridge = 1e-12 * (1.0 + haa + hbb);
        let pinned = (b >= hi && gb < 0.0) || (b <= lo && gb > 0.0);
        let (mut da, mut db) = if pinned {
            (-ga / (haa + ridge), 0.0)
        } else {
            let (h11, h22) = (haa + ridge, hbb + ridge);
            let det = h11 * h22 - hab * hab;
            if det > 0.0 {
                ((-h22 * ga + hab * gb) / det, (hab * ga - h11 * gb) / det)
            } else {
                (-ga, -gb)
            }
        };
        if !(da.is_finite() && db.is_finite()) || da * ga + db * gb >= 0.0 {
            da = -ga;
            db = if pinned { 0.0 } else { -gb };
        }

        let mut step = 1.0;
        let (mut na, mut nb, mut nf);
        loop {
            na = a + step * da;
            nb = (b + step * db).clamp(lo, hi);
            nf = nll(na, nb);
            let decrease = ga * (na - a) + gb * (nb - b);
            if nf <= f + 1e-4 * decrease || step < 1e-12 {
                break;
            }
            step *= 0.5;
        }
        if nf > f {
            break;
        }
        let change = (na - a).abs().max(nb - b).max(b - nb);
        a = na;
        b = nb;
        f = nf;
        if change < opts.tolerance {
            break;
        }
    }

    FitState {
        pairs: pairs.to_vec(),
        params: SigmoidParams {
            alpha: center - a / b,
            tau: b,
            direction,
        },
        trusted: true,
        iterations,
        stats,
    }
}

/// Confidence in an influence model at a given feature value, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Confidence(f64);

impl Confidence {
    pub const ZERO: Confidence = Confidence(0.0);
    pub const FULL: Confidence = Confidence(1.0);

    /// Clamps into `[0, 1]`.
    pub fn new(theta: f64) -> Self {
        Confidence(if theta.is_nan() { 0.0 } else { theta.clamp(0.0, 1.0) })
    }

    pub fn theta(self) -> f64 {
        self.0
    }
}

/// `theta = max(0, 1 - h)` with `h` the half-width of the 95% prediction
/// interval of a linear regression of `y` on `x`. Zero below three pairs.
pub fn confidence_theta(fit: &FitState, x: f64) -> Confidence {
    match fit.stats.prediction_half_width(x) {
        Some(h) => Confidence::new(1.0 - h),
        None => Confidence::ZERO,
    }
}

pub fn unary_weight(theta: Confidence, params: &SigmoidParams, x: f64) -> f64 {
    theta.0 * params.tau * (x - params.alpha)
}

pub fn binary_weight(theta: Confidence, params: &SigmoidParams, similarity: f64) -> f64 {
    theta.0 * params.tau * (similarity - params.alpha)
}
