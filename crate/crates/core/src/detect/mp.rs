use serde::{Deserialize, Serialize};

use super::{top_k, DetectionResult, Method};
use crate::error::{Error, Result};
use crate::model::{ln_normal_pdf, Hypothesis, HypothesisSpace, ObservationSet};

const CLAMP: f64 = 30.0;
const TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MpParams {
    pub max_iters: usize,
    /// Weight of the fresh update: `new = damping·update + (1−damping)·old`.
    pub damping: f64,
}

impl Default for MpParams {
    fn default() -> Self {
        MpParams {
            max_iters: 200,
            damping: 0.5,
        }
    }
}

/// Bipartite graph between measurements (checks) and variables, built from
/// 0/1 sensing vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorGraph {
    n: usize,
    /// Variables of each check.
    checks: Vec<Vec<usize>>,
    /// `(check, edge)` pairs of each variable, where `edge` indexes the flat
    /// edge list in check order.
    vars: Vec<Vec<(usize, usize)>>,
    /// First edge index of each check.
    offsets: Vec<usize>,
}

impl FactorGraph {
    pub fn from_observations(obs: &ObservationSet) -> Result<Self> {
        let n = obs.dim();
        let mut checks = Vec::with_capacity(obs.len());
        for (j, r) in obs.records().iter().enumerate() {
            let mut row = Vec::new();
            for (i, &a) in r.vector.iter().enumerate() {
                if a == 1.0 {
                    row.push(i);
                } else if a != 0.0 {
                    return Err(Error::invalid(format!(
                        "message passing needs 0/1 sensing vectors; record {j} has {a}"
                    )));
                }
            }
            if row.is_empty() {
                return Err(Error::DegenerateProjection(format!("record {j} is all zero")));
            }
            checks.push(row);
        }
        let mut vars = vec![Vec::new(); n];
        let mut offsets = Vec::with_capacity(checks.len());
        let mut e = 0;
        for (c, row) in checks.iter().enumerate() {
            offsets.push(e);
            for &i in row {
                vars[i].push((c, e));
                e += 1;
            }
        }
        Ok(FactorGraph {
            n,
            checks,
            vars,
            offsets,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn checks(&self) -> &[Vec<usize>] {
        &self.checks
    }

    pub fn edge_count(&self) -> usize {
        self.checks.iter().map(Vec::len).sum()
    }

    /// Checks adjacent to variable `i`.
    pub fn neighbours(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.vars[i].iter().map(|&(c, _)| c)
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Log-odds that the variable on edge `skip` is abnormal given measurement
/// `y` of a check whose other variables are abnormal with probabilities
/// `probs`. The likelihood depends only on how many covered variables are
/// abnormal, so the count distribution is built by convolution.
fn check_message(space: &HypothesisSpace, y: f64, probs: &[f64], skip: usize, counts: &mut Vec<f64>) -> f64 {
    let d = probs.len();
    counts.clear();
    counts.push(1.0);
    for (s, &p) in probs.iter().enumerate() {
        if s == skip {
            continue;
        }
        counts.push(0.0);
        for t in (0..counts.len()).rev() {
            let stay = counts[t] * (1.0 - p);
            let up = if t > 0 { counts[t - 1] * p } else { 0.0 };
            counts[t] = stay + up;
        }
    }
    let (f1, f2) = (space.normal, space.abnormal);
    let ln_lik = |abnormal: usize| {
        let mean = abnormal as f64 * f2.mean + (d - abnormal) as f64 * f1.mean;
        let var = abnormal as f64 * f2.variance + (d - abnormal) as f64 * f1.variance;
        ln_normal_pdf(y, mean, var)
    };
    let branch = |own: usize| {
        let terms: Vec<f64> = counts
            .iter()
            .enumerate()
            .map(|(t, &w)| w.ln() + ln_lik(t + own))
            .collect();
        log_sum_exp(&terms)
    };
    (branch(1) - branch(0)).clamp(-CLAMP, CLAMP)
}

/// Sum-product message passing with an independent Bernoulli(k/n) prior per
/// variable; messages are log-odds of abnormality. The decision is the `k`
/// variables with the largest marginals.
pub fn mp_detect(space: &HypothesisSpace, obs: &ObservationSet, params: &MpParams) -> Result<DetectionResult> {
    if obs.dim() != space.n {
        return Err(Error::invalid("observation dimension does not match n"));
    }
    if !(params.damping > 0.0 && params.damping <= 1.0) {
        return Err(Error::domain(format!(
            "damping must be in (0,1], got {}",
            params.damping
        )));
    }
    let graph = FactorGraph::from_observations(obs)?;
    let prior = (space.k as f64 / space.n as f64).ln() - (1.0 - space.k as f64 / space.n as f64).ln();
    let edges = graph.edge_count();
    let mut to_var = vec![0.0f64; edges];
    let mut to_check = vec![prior; edges];
    let mut fresh = vec![0.0f64; edges];
    let mut probs = Vec::new();
    let mut counts = Vec::new();
    let values = obs.values();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iters {
        iterations += 1;
        for (c, row) in graph.checks.iter().enumerate() {
            let base = graph.offsets[c];
            probs.clear();
            probs.extend((0..row.len()).map(|s| logistic(to_check[base + s])));
            for s in 0..row.len() {
                fresh[base + s] = check_message(space, values[c], &probs, s, &mut counts);
            }
        }
        let mut change = 0.0f64;
        for e in 0..edges {
            let new = params.damping * fresh[e] + (1.0 - params.damping) * to_var[e];
            change = change.max((new - to_var[e]).abs());
            to_var[e] = new;
        }
        for adj in &graph.vars {
            let total: f64 = prior + adj.iter().map(|&(_, e)| to_var[e]).sum::<f64>();
            for &(_, e) in adj {
                to_check[e] = (total - to_var[e]).clamp(-CLAMP, CLAMP);
            }
        }
        if change < TOL {
            converged = true;
            break;
        }
    }

    let marginals: Vec<f64> = graph
        .vars
        .iter()
        .map(|adj| logistic(prior + adj.iter().map(|&(_, e)| to_var[e]).sum::<f64>()))
        .collect();
    let (support, tied) = top_k(&marginals, space.k);
    Ok(DetectionResult {
        method: Method::Mp,
        support: Some(Hypothesis::new(support, space.n)?),
        scores: marginals,
        iterations,
        tied,
        converged,
    })
}
