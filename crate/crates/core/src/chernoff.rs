//! λ-divergences and Chernoff information: plain, inner conditional (IC)
//! and outer conditional (OC) over a discrete sensing ensemble, together with
//! the tilted-distribution balance check, minimum pairwise exponents and
//! sample-complexity planning.
//!
//! All quantities are in nats.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{binomial, enumerate_hypotheses, Gaussian, Hypothesis, HypothesisSpace};
use crate::numeric::{adaptive_simpson, maximize_unit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    NumericIntegration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceResult {
    /// Nats, non-negative.
    pub value: f64,
    pub lambda_star: f64,
    pub method: Method,
}

impl DivergenceResult {
    pub fn bits(&self) -> f64 {
        self.value / std::f64::consts::LN_2
    }
}

/// A discrete distribution over sensing vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEnsemble")]
pub struct SensingEnsemble {
    vectors: Vec<Vec<f64>>,
    probabilities: Vec<f64>,
}

#[derive(Deserialize)]
struct RawEnsemble {
    vectors: Vec<Vec<f64>>,
    probabilities: Vec<f64>,
}

impl TryFrom<RawEnsemble> for SensingEnsemble {
    type Error = Error;
    fn try_from(raw: RawEnsemble) -> Result<Self> {
        SensingEnsemble::new(raw.vectors, raw.probabilities)
    }
}

impl SensingEnsemble {
    pub fn new(vectors: Vec<Vec<f64>>, probabilities: Vec<f64>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::invalid("ensemble must have at least one vector"));
        }
        if vectors.len() != probabilities.len() {
            return Err(Error::invalid(format!(
                "{} vectors but {} probabilities",
                vectors.len(),
                probabilities.len()
            )));
        }
        let dim = vectors[0].len();
        if dim == 0 || vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::invalid("ensemble vectors must share a non-zero dimension"));
        }
        if probabilities.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::invalid("probabilities must be non-negative"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(SensingEnsemble {
            vectors,
            probabilities,
        })
    }

    /// Uniform weights over `vectors`, e.g. one period of a round-robin schedule.
    pub fn uniform(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let len = vectors.len().max(1);
        let p = 1.0 / len as f64;
        let mut probabilities = vec![p; vectors.len()];
        // Absorb rounding so the sum is 1 to machine precision.
        if let Some(last) = probabilities.last_mut() {
            *last = 1.0 - p * (len - 1) as f64;
        }
        SensingEnsemble::new(vectors, probabilities)
    }

    pub fn single(vector: Vec<f64>) -> Result<Self> {
        SensingEnsemble::new(vec![vector], vec![1.0])
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.vectors
            .iter()
            .map(Vec::as_slice)
            .zip(self.probabilities.iter().copied())
    }
}

fn check_variances(p: &Gaussian, q: &Gaussian) -> Result<()> {
    if !(p.variance > 0.0 && q.variance > 0.0) {
        return Err(Error::domain("variances must be positive"));
    }
    Ok(())
}

/// `−ln ∫ p^λ q^{1−λ} dy` for two scalar Gaussians, in closed form:
/// `½ ln(V / (σ_p^{2(1−λ)} σ_q^{2λ})) + λ(1−λ)(μ_p−μ_q)²/(2V)` with
/// `V = λσ_q² + (1−λ)σ_p²`.
pub fn lambda_divergence_gaussian(p: &Gaussian, q: &Gaussian, lambda: f64) -> Result<f64> {
    check_variances(p, q)?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::domain(format!("lambda must be in [0,1], got {lambda}")));
    }
    Ok(lambda_div(p, q, lambda))
}

#[inline]
fn lambda_div(p: &Gaussian, q: &Gaussian, l: f64) -> f64 {
    let (vp, vq) = (p.variance, q.variance);
    let v = l * vq + (1.0 - l) * vp;
    let d = p.mean - q.mean;
    0.5 * (v.ln() - (1.0 - l) * vp.ln() - l * vq.ln()) + l * (1.0 - l) * d * d / (2.0 * v)
}

/// d/dλ of [`lambda_div`], differentiated from the closed form.
#[inline]
fn lambda_div_slope(p: &Gaussian, q: &Gaussian, l: f64) -> f64 {
    let (vp, vq) = (p.variance, q.variance);
    let v = l * vq + (1.0 - l) * vp;
    let dv = vq - vp;
    let d2 = (p.mean - q.mean).powi(2);
    0.5 * (dv / v + vp.ln() - vq.ln())
        + 0.5 * d2 * ((1.0 - 2.0 * l) * v - l * (1.0 - l) * dv) / (v * v)
}

/// Chernoff information between two scalar Gaussians.
pub fn chernoff(p: &Gaussian, q: &Gaussian) -> Result<DivergenceResult> {
    check_variances(p, q)?;
    if p == q {
        return Ok(DivergenceResult {
            value: 0.0,
            lambda_star: 0.5,
            method: Method::ClosedForm,
        });
    }
    let f = |l: f64| lambda_div(p, q, l);
    let df = |l: f64| lambda_div_slope(p, q, l);
    let best = maximize_unit(f, Some(&df));
    Ok(DivergenceResult {
        value: best.value.max(0.0),
        lambda_star: best.arg,
        method: Method::ClosedForm,
    })
}

/// A univariate density known through its log-pdf.
pub trait Density: Sync {
    fn ln_pdf(&self, y: f64) -> f64;
    /// `(centre, scale)` locating the bulk of the mass.
    fn support_hint(&self) -> (f64, f64);
}

impl Density for Gaussian {
    fn ln_pdf(&self, y: f64) -> f64 {
        Gaussian::ln_pdf(self, y)
    }

    fn support_hint(&self) -> (f64, f64) {
        (self.mean, self.std_dev())
    }
}

const INTEGRATION_TOL: f64 = 1e-10;
const INTEGRATION_PANELS: usize = 64;

/// `−ln ∫ p^λ q^{1−λ} dy` by adaptive Simpson on
/// `[c_min − 12 s_max, c_max + 12 s_max]`.
///
/// The integrand is rescaled by its peak before integration so the absolute
/// tolerance is effectively relative.
pub fn lambda_divergence_numeric(p: &dyn Density, q: &dyn Density, lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::domain(format!("lambda must be in [0,1], got {lambda}")));
    }
    let (cp, sp) = p.support_hint();
    let (cq, sq) = q.support_hint();
    let s = sp.max(sq);
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Numeric("support hint scale must be positive".into()));
    }
    let a = cp.min(cq) - 12.0 * s;
    let b = cp.max(cq) + 12.0 * s;
    let log_integrand = |y: f64| {
        let lp = p.ln_pdf(y);
        let lq = q.ln_pdf(y);
        match (lambda == 0.0, lambda == 1.0) {
            (true, _) => lq,
            (_, true) => lp,
            _ => lambda * lp + (1.0 - lambda) * lq,
        }
    };
    let grid = 4001;
    let peak = (0..grid)
        .map(|i| log_integrand(a + (b - a) * i as f64 / (grid - 1) as f64))
        .fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return Err(Error::Numeric(
            "integrand vanishes on the integration interval".into(),
        ));
    }
    let scaled = |y: f64| (log_integrand(y) - peak).exp();
    let integral = adaptive_simpson(&scaled, a, b, INTEGRATION_TOL, INTEGRATION_PANELS)?;
    if !(integral > 0.0) {
        return Err(Error::Numeric(format!("non-positive integral {integral}")));
    }
    Ok(-(peak + integral.ln()))
}

/// Chernoff information between two generic densities by numeric integration.
pub fn chernoff_numeric(p: &dyn Density, q: &dyn Density) -> Result<DivergenceResult> {
    let failure = std::sync::Mutex::new(None);
    let f = |l: f64| match lambda_divergence_numeric(p, q, l) {
        Ok(v) => v,
        Err(e) => {
            failure.lock().unwrap().get_or_insert(e);
            f64::NAN
        }
    };
    let best = maximize_unit(f, None);
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    Ok(DivergenceResult {
        value: best.value.max(0.0),
        lambda_star: best.arg,
        method: Method::NumericIntegration,
    })
}

/// Stationary point of `½ ln((α + (1−α)B) / B^{1−α})`: for two zero-mean
/// Gaussians with variance ratio `B`, the optimal exponent on the
/// larger-variance density.
pub fn variance_ratio_alpha(ratio: f64) -> Result<f64> {
    if !(ratio >= 1.0) || !ratio.is_finite() {
        return Err(Error::domain(format!("variance ratio must be >= 1, got {ratio}")));
    }
    let t = ratio.ln();
    if t < 1e-3 {
        // Series of the quotient below in t = ln B.
        return Ok((0.5 + t / 3.0 + t * t / 8.0) / (1.0 + t / 2.0 + t * t / 6.0));
    }
    Ok((-(ratio - 1.0) + ratio * t) / ((ratio - 1.0) * t))
}

/// Chernoff information between `N(μ, 1)` and `N(μ, B)`:
/// `½(−1 + B ln B/(B−1) + ln((B−1)/(B ln B)))`.
pub fn variance_ratio_chernoff(ratio: f64) -> Result<f64> {
    let alpha = variance_ratio_alpha(ratio)?;
    let t = ratio.ln();
    if t < 1e-3 {
        let value = 0.5 * ((1.0 - alpha) * (ratio - 1.0)).ln_1p() - 0.5 * (1.0 - alpha) * t;
        return Ok(value.max(0.0));
    }
    let b = ratio;
    Ok(0.5 * (-1.0 + b / (b - 1.0) * t + ((b - 1.0) / (b * t)).ln()))
}

/// Per-atom projected pairs `(probability, p_v, p_w)`; zero-probability atoms dropped.
fn atom_pairs(
    ensemble: &SensingEnsemble,
    space: &HypothesisSpace,
    hv: &Hypothesis,
    hw: &Hypothesis,
) -> Result<Vec<(f64, Gaussian, Gaussian)>> {
    if ensemble.dim() != space.n {
        return Err(Error::invalid(format!(
            "ensemble dimension {} does not match n={}",
            ensemble.dim(),
            space.n
        )));
    }
    space.check(hv)?;
    space.check(hw)?;
    let mut out = Vec::with_capacity(ensemble.len());
    for (a, prob) in ensemble.atoms() {
        let pv = space.project(a, hv)?;
        let pw = space.project(a, hw)?;
        if prob > 0.0 {
            out.push((prob, pv, pw));
        }
    }
    Ok(out)
}

fn outer_from_pairs(pairs: &[(f64, Gaussian, Gaussian)]) -> DivergenceResult {
    let f = |l: f64| pairs.iter().map(|(w, p, q)| w * lambda_div(p, q, l)).sum::<f64>();
    let df = |l: f64| {
        pairs
            .iter()
            .map(|(w, p, q)| w * lambda_div_slope(p, q, l))
            .sum::<f64>()
    };
    let best = maximize_unit(f, Some(&df));
    DivergenceResult {
        value: best.value.max(0.0),
        lambda_star: best.arg,
        method: Method::ClosedForm,
    }
}

/// `IC = −min_λ ln E_A[∫ p_v^λ p_w^{1−λ}]`, the exponent for sensing vectors
/// drawn independently at random each time index.
pub fn inner_conditional_chernoff(
    ensemble: &SensingEnsemble,
    space: &HypothesisSpace,
    hv: &Hypothesis,
    hw: &Hypothesis,
) -> Result<DivergenceResult> {
    let pairs = atom_pairs(ensemble, space, hv, hw)?;
    // −ln Σ w_a exp(−D_a(λ)), via log-sum-exp.
    let f = |l: f64| {
        let terms: Vec<f64> = pairs
            .iter()
            .map(|(w, p, q)| w.ln() - lambda_div(p, q, l))
            .collect();
        -log_sum_exp(&terms)
    };
    let df = |l: f64| {
        let terms: Vec<f64> = pairs
            .iter()
            .map(|(w, p, q)| w.ln() - lambda_div(p, q, l))
            .collect();
        let lse = log_sum_exp(&terms);
        pairs
            .iter()
            .zip(&terms)
            .map(|((_, p, q), t)| (t - lse).exp() * lambda_div_slope(p, q, l))
            .sum::<f64>()
    };
    let best = maximize_unit(f, Some(&df));
    Ok(DivergenceResult {
        value: best.value.max(0.0),
        lambda_star: best.arg,
        method: Method::ClosedForm,
    })
}

/// `OC = −min_λ E_A[ln ∫ p_v^λ p_w^{1−λ}]`, the exponent for a deterministic
/// schedule that uses each vector a fixed fraction of the time.
pub fn outer_conditional_chernoff(
    ensemble: &SensingEnsemble,
    space: &HypothesisSpace,
    hv: &Hypothesis,
    hw: &Hypothesis,
) -> Result<DivergenceResult> {
    let pairs = atom_pairs(ensemble, space, hv, hw)?;
    Ok(outer_from_pairs(&pairs))
}

/// `max_a −ln(1 − p_A(a) + p_A(a) e^{−C_a})`, a lower bound on IC.
pub fn holder_bound(
    ensemble: &SensingEnsemble,
    space: &HypothesisSpace,
    hv: &Hypothesis,
    hw: &Hypothesis,
) -> Result<f64> {
    let pairs = atom_pairs(ensemble, space, hv, hw)?;
    let mut best = 0.0f64;
    for (w, p, q) in &pairs {
        let c = chernoff(p, q)?.value;
        best = best.max(-(1.0 - w + w * (-c).exp()).ln());
    }
    Ok(best)
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// The normalized geometric mixture `p^λ q^{1−λ}` of two Gaussians.
pub fn tilted(p: &Gaussian, q: &Gaussian, lambda: f64) -> Gaussian {
    let precision = lambda / p.variance + (1.0 - lambda) / q.variance;
    let mean = (lambda * p.mean / p.variance + (1.0 - lambda) * q.mean / q.variance) / precision;
    Gaussian {
        mean,
        variance: 1.0 / precision,
    }
}

/// `D(p || q)` for scalar Gaussians.
pub fn kl_gaussian(p: &Gaussian, q: &Gaussian) -> f64 {
    let ratio = p.variance / q.variance;
    0.5 * (ratio + (p.mean - q.mean).powi(2) / q.variance - 1.0 - ratio.ln())
}

/// Expected KL divergences from the per-vector tilted distribution to the two
/// hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltedBalance {
    /// `E_A D(P_λ || p(·|H_v))`
    pub q_vw: f64,
    /// `E_A D(P_λ || p(·|H_w))`
    pub q_wv: f64,
}

pub fn tilted_balance(
    ensemble: &SensingEnsemble,
    space: &HypothesisSpace,
    hv: &Hypothesis,
    hw: &Hypothesis,
    lambda: f64,
) -> Result<TiltedBalance> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::domain(format!("lambda must be in (0,1), got {lambda}")));
    }
    let pairs = atom_pairs(ensemble, space, hv, hw)?;
    let (mut q_vw, mut q_wv) = (0.0, 0.0);
    for (w, pv, pw) in &pairs {
        let t = tilted(pv, pw, lambda);
        q_vw += w * kl_gaussian(&t, pv);
        q_wv += w * kl_gaussian(&t, pw);
    }
    Ok(TiltedBalance { q_vw, q_wv })
}

/// Minimum (and maximum) of the pairwise OC over all hypothesis pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseExponent {
    /// The error exponent `E = min_{v≠w} OC`.
    pub value: f64,
    pub lambda_star: f64,
    pub argmin: (Hypothesis, Hypothesis),
    /// Largest pairwise OC among the pairs examined.
    pub max: f64,
    pub pairs_examined: usize,
}

/// `E = min_{v≠w} OC(p_{Y|A,H_v}, p_{Y|A,H_w})` by exhaustive enumeration.
///
/// With `permutation_invariant` set the caller asserts the ensemble is
/// invariant under relabelling of the variables; only pairs involving the
/// first hypothesis are then examined, which covers every orbit.
pub fn min_pairwise_exponent(
    ensemble: &SensingEnsemble,
    space: &HypothesisSpace,
    permutation_invariant: bool,
) -> Result<PairwiseExponent> {
    if ensemble.dim() != space.n {
        return Err(Error::invalid(format!(
            "ensemble dimension {} does not match n={}",
            ensemble.dim(),
            space.n
        )));
    }
    let hyps = enumerate_hypotheses(space.n, space.k)?;
    // projections[h][a]
    let projections: Vec<Vec<Gaussian>> = hyps
        .par_iter()
        .map(|h| {
            ensemble
                .vectors()
                .iter()
                .map(|a| space.project(a, h))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let weights = ensemble.probabilities();
    let l = hyps.len();
    let firsts: Vec<usize> = if permutation_invariant { vec![0] } else { (0..l).collect() };

    let results: Vec<(f64, f64, usize, usize, f64)> = firsts
        .par_iter()
        .map(|&v| {
            let mut row_min = (f64::INFINITY, 0.5, v, v);
            let mut row_max = f64::NEG_INFINITY;
            for w in v + 1..l {
                let pairs: Vec<(f64, Gaussian, Gaussian)> = weights
                    .iter()
                    .zip(projections[v].iter().zip(&projections[w]))
                    .filter(|(&p, _)| p > 0.0)
                    .map(|(&p, (a, b))| (p, *a, *b))
                    .collect();
                let oc = outer_from_pairs(&pairs);
                if oc.value < row_min.0 {
                    row_min = (oc.value, oc.lambda_star, v, w);
                }
                row_max = row_max.max(oc.value);
            }
            (row_min.0, row_min.1, row_min.2, row_min.3, row_max)
        })
        .collect();

    let mut best: Option<(f64, f64, usize, usize)> = None;
    let mut max = f64::NEG_INFINITY;
    for (value, lambda, v, w, row_max) in results {
        max = max.max(row_max);
        if v != w && best.is_none_or(|b| value < b.0) {
            best = Some((value, lambda, v, w));
        }
    }
    let (value, lambda_star, v, w) =
        best.ok_or_else(|| Error::invalid("need at least two hypotheses"))?;
    let pairs_examined = if permutation_invariant {
        l - 1
    } else {
        l * (l - 1) / 2
    };
    Ok(PairwiseExponent {
        value,
        lambda_star,
        argmin: (hyps[v].clone(), hyps[w].clone()),
        max,
        pairs_examined,
    })
}

/// Default target error probability for [`sample_complexity`].
pub const DEFAULT_DELTA: f64 = 0.01;

/// Smallest `m` with `C(n,k)·e^{−mE} ≤ δ`, i.e. `⌈ln(C(n,k)/δ)/E⌉`, at least 1.
///
/// An order-of-magnitude planning figure from the union bound, with the
/// error probability modelled as `e^{−mE}` in nats.
pub fn sample_complexity(n: usize, k: usize, exponent: f64, delta: f64) -> Result<u64> {
    if !(exponent > 0.0) {
        return Err(Error::Indistinguishable(format!(
            "error exponent {exponent} is not positive"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must be in (0,1), got {delta}")));
    }
    if k < 1 || k >= n {
        return Err(Error::domain(format!("need 1 <= k < n, got n={n}, k={k}")));
    }
    let m = ((binomial(n, k) / delta).ln() / exponent).ceil();
    Ok(if m.is_finite() { m.max(1.0) as u64 } else { 1 })
}
