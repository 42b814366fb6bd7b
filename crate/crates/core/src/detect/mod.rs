//! Anomaly detectors operating on an [`ObservationSet`].

mod lasso;
mod lrt;
mod mp;
mod oracle;
mod pairwise;

pub use lasso::{default_lasso_lambda, lasso_detect, lasso_solve};
pub use lrt::lrt_full;
pub use mp::{mp_detect, FactorGraph, MpParams};
pub use oracle::{mp_exact_posterior, PriorModel};
pub use pairwise::{pairwise_np, pairwise_np_with_threshold};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ln_normal_pdf, Hypothesis, HypothesisSpace, ObservationSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lrt,
    Pairwise,
    Lasso,
    Mp,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Lrt => "lrt",
            Method::Pairwise => "pairwise",
            Method::Lasso => "lasso",
            Method::Mp => "mp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub method: Method,
    /// The estimated anomaly set; `None` when the tournament finds no winner.
    pub support: Option<Hypothesis>,
    /// Log-likelihoods per hypothesis (LRT, pairwise), coefficients (LASSO)
    /// or abnormal marginals (MP).
    pub scores: Vec<f64>,
    pub iterations: usize,
    /// Another candidate scored equally and lost only to the lexicographic rule.
    pub tied: bool,
    pub converged: bool,
}

impl DetectionResult {
    pub fn is_failure(&self) -> bool {
        self.support.is_none()
    }

    /// Failures count as errors.
    pub fn is_correct(&self, truth: &Hypothesis) -> bool {
        self.support.as_ref() == Some(truth)
    }
}

/// A detector and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Detector {
    Lrt,
    Pairwise {
        #[serde(default)]
        threshold: f64,
    },
    Lasso {
        #[serde(default)]
        lambda: Option<f64>,
    },
    Mp(#[serde(default)] MpParams),
}

impl Detector {
    pub fn run(&self, space: &HypothesisSpace, obs: &ObservationSet) -> Result<DetectionResult> {
        match self {
            Detector::Lrt => lrt_full(space, obs),
            Detector::Pairwise { threshold } => pairwise_np_with_threshold(space, obs, *threshold),
            Detector::Lasso { lambda } => lasso_detect(space, obs, *lambda),
            Detector::Mp(params) => mp_detect(space, obs, params),
        }
    }
}

/// Per-observation sufficient statistics for evaluating Gaussian likelihoods
/// of many supports against the same observations.
pub(crate) struct LikelihoodTable<'a> {
    space: &'a HypothesisSpace,
    obs: &'a ObservationSet,
    base_mean: Vec<f64>,
    base_var: Vec<f64>,
}

impl<'a> LikelihoodTable<'a> {
    pub(crate) fn new(space: &'a HypothesisSpace, obs: &'a ObservationSet) -> Result<Self> {
        if obs.dim() != space.n {
            return Err(Error::invalid(format!(
                "observations have dimension {}, space has n={}",
                obs.dim(),
                space.n
            )));
        }
        let (base_mean, base_var) = obs
            .records()
            .iter()
            .map(|r| {
                let s: f64 = r.vector.iter().sum();
                let s2: f64 = r.vector.iter().map(|a| a * a).sum();
                (space.normal.mean * s, space.normal.variance * s2)
            })
            .unzip();
        Ok(LikelihoodTable {
            space,
            obs,
            base_mean,
            base_var,
        })
    }

    /// `Σ_j ln N(y^j; a^jᵀμ_S, a^jᵀΣ_S a^j)` for an arbitrary support `S`.
    pub(crate) fn log_likelihood(&self, support: &[usize]) -> Result<f64> {
        let dm = self.space.abnormal.mean - self.space.normal.mean;
        let dv = self.space.abnormal.variance - self.space.normal.variance;
        let mut total = 0.0;
        for (j, r) in self.obs.records().iter().enumerate() {
            let (mut mean, mut var) = (self.base_mean[j], self.base_var[j]);
            for &i in support {
                let a = r.vector[i];
                mean += dm * a;
                var += dv * a * a;
            }
            if !(var > 0.0) {
                return Err(Error::DegenerateProjection(format!(
                    "observation {j} has zero projected variance"
                )));
            }
            total += ln_normal_pdf(r.value, mean, var);
        }
        Ok(total)
    }
}

/// `Σ_j ln N(y^j; a^jᵀμ_H, a^jᵀΣ_H a^j)`.
pub fn log_likelihood(space: &HypothesisSpace, h: &Hypothesis, obs: &ObservationSet) -> Result<f64> {
    space.check(h)?;
    LikelihoodTable::new(space, obs)?.log_likelihood(h.support())
}

/// Indices of the `k` largest scores, ties to the smaller index; returns the
/// sorted support and whether the `k`-th and `(k+1)`-th scores tie.
pub(crate) fn top_k(scores: &[f64], k: usize) -> (Vec<usize>, bool) {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let tied = k < idx.len() && scores[idx[k - 1]] == scores[idx[k]];
    let mut support = idx[..k].to_vec();
    support.sort_unstable();
    (support, tied)
}

pub(crate) fn nearly_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}
