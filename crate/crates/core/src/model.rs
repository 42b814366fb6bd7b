//! The anomaly model: `n` independent scalar random variables, `k` of which
//! follow the abnormal distribution `f2` while the rest follow `f1`. Each
//! observation is a single linear measurement `y = aᵀx` of a fresh
//! realization of the whole vector.

use nalgebra::{DMatrix, DVector};
use rand::distr::Distribution;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::design::SensingStrategy;
use crate::error::{Error, Result};
use crate::seed::{self, stream};

/// Default cap on the number of enumerated hypotheses.
pub const DEFAULT_HYPOTHESIS_CAP: usize = 1_000_000;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// A univariate Gaussian `N(mean, var)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: f64,
    #[serde(alias = "var")]
    pub variance: f64,
}

impl Gaussian {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !variance.is_finite() {
            return Err(Error::domain("Gaussian parameters must be finite"));
        }
        if variance <= 0.0 {
            return Err(Error::domain(format!(
                "variance must be positive, got {variance}"
            )));
        }
        Ok(Gaussian { mean, variance })
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn ln_pdf(&self, y: f64) -> f64 {
        ln_normal_pdf(y, self.mean, self.variance)
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.ln_pdf(y).exp()
    }
}

/// `ln N(y; mean, var)`.
#[inline]
pub fn ln_normal_pdf(y: f64, mean: f64, var: f64) -> f64 {
    let d = y - mean;
    -0.5 * (LN_2PI + var.ln() + d * d / var)
}

/// A (possibly multivariate) Gaussian with mean vector and covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSpec {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianSpec {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::invalid("Gaussian dimension must be at least 1"));
        }
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::invalid(format!(
                "covariance is {}x{}, expected {d}x{d}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        let scale = cov.amax().max(f64::MIN_POSITIVE);
        for i in 0..d {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::invalid(format!(
                        "covariance not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let eig = cov.clone().symmetric_eigen();
        let max_eig = eig.eigenvalues.max();
        let min_eig = eig.eigenvalues.min();
        if min_eig < -1e-10 * max_eig.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::CovarianceNotPsd(format!(
                "smallest eigenvalue {min_eig}"
            )));
        }
        Ok(GaussianSpec { mean, cov })
    }

    pub fn diagonal(mean: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        if mean.len() != variances.len() {
            return Err(Error::invalid("mean and variance lengths differ"));
        }
        let cov = DMatrix::from_diagonal(&DVector::from_vec(variances));
        GaussianSpec::new(DVector::from_vec(mean), cov)
    }

    pub fn scalar(g: Gaussian) -> Self {
        GaussianSpec {
            mean: DVector::from_element(1, g.mean),
            cov: DMatrix::from_element(1, 1, g.variance),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }
}

/// An anomaly hypothesis: the sorted set of anomalous indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Hypothesis(Vec<usize>);

impl Hypothesis {
    pub fn new(mut support: Vec<usize>, n: usize) -> Result<Self> {
        support.sort_unstable();
        if support.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("support contains duplicate indices"));
        }
        if let Some(&last) = support.last() {
            if last >= n {
                return Err(Error::invalid(format!(
                    "support index {last} out of range for n={n}"
                )));
            }
        }
        Ok(Hypothesis(support))
    }

    pub fn support(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `(n, k, f1, f2)`: `k` of `n` variables follow `abnormal`, the rest `normal`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSpace {
    pub n: usize,
    pub k: usize,
    pub normal: Gaussian,
    pub abnormal: Gaussian,
}

impl HypothesisSpace {
    pub fn new(n: usize, k: usize, normal: Gaussian, abnormal: Gaussian) -> Result<Self> {
        if k < 1 || k >= n {
            return Err(Error::domain(format!("need 1 <= k < n, got n={n}, k={k}")));
        }
        Gaussian::new(normal.mean, normal.variance)?;
        Gaussian::new(abnormal.mean, abnormal.variance)?;
        if (normal.mean - abnormal.mean).abs() <= 1e-12
            && (normal.variance - abnormal.variance).abs() <= 1e-12
        {
            return Err(Error::Indistinguishable(
                "normal and abnormal distributions coincide".into(),
            ));
        }
        Ok(HypothesisSpace {
            n,
            k,
            normal,
            abnormal,
        })
    }

    pub fn hypothesis_count(&self) -> f64 {
        binomial(self.n, self.k)
    }

    pub fn hypotheses(&self) -> Result<Vec<Hypothesis>> {
        enumerate_hypotheses(self.n, self.k)
    }

    pub fn check(&self, h: &Hypothesis) -> Result<()> {
        if h.len() != self.k {
            return Err(Error::invalid(format!(
                "hypothesis has {} anomalies, space expects {}",
                h.len(),
                self.k
            )));
        }
        if h.support().last().is_some_and(|&i| i >= self.n) {
            return Err(Error::invalid("hypothesis index out of range"));
        }
        Ok(())
    }

    /// Distribution of `aᵀX` under hypothesis `h`, computed directly from the
    /// diagonal structure.
    pub fn project(&self, a: &[f64], h: &Hypothesis) -> Result<Gaussian> {
        if a.len() != self.n {
            return Err(Error::invalid(format!(
                "sensing vector has dimension {}, expected {}",
                a.len(),
                self.n
            )));
        }
        let (mut mean, mut var) = (0.0, 0.0);
        let (mut mean_shift, mut var_shift) = (0.0, 0.0);
        for (i, &ai) in a.iter().enumerate() {
            mean += ai;
            var += ai * ai;
            if h.contains(i) {
                mean_shift += ai;
                var_shift += ai * ai;
            }
        }
        if var == 0.0 {
            return Err(Error::DegenerateProjection("all-zero sensing vector".into()));
        }
        let mean = self.normal.mean * mean + (self.abnormal.mean - self.normal.mean) * mean_shift;
        let var = self.normal.variance * var
            + (self.abnormal.variance - self.normal.variance) * var_shift;
        Ok(Gaussian {
            mean,
            variance: var,
        })
    }
}

/// `C(n, k)` as a float (exact for every value below 2^53).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

/// All `C(n,k)` supports in lexicographic order, capped at [`DEFAULT_HYPOTHESIS_CAP`].
pub fn enumerate_hypotheses(n: usize, k: usize) -> Result<Vec<Hypothesis>> {
    enumerate_hypotheses_capped(n, k, DEFAULT_HYPOTHESIS_CAP)
}

pub fn enumerate_hypotheses_capped(n: usize, k: usize, cap: usize) -> Result<Vec<Hypothesis>> {
    if k < 1 || k >= n {
        return Err(Error::domain(format!("need 1 <= k < n, got n={n}, k={k}")));
    }
    let count = binomial(n, k);
    if count > cap as f64 {
        return Err(Error::CombinatorialOverflow { n, k, count, cap });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(Hypothesis(idx.clone()));
        // Advance to the next combination in lexicographic order.
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if idx[i] < n - k + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Joint moments of the `n` variables under `h`: diagonal covariance.
pub fn hypothesis_moments(space: &HypothesisSpace, h: &Hypothesis) -> Result<GaussianSpec> {
    space.check(h)?;
    let (mean, var): (Vec<f64>, Vec<f64>) = (0..space.n)
        .map(|i| {
            let g = if h.contains(i) {
                space.abnormal
            } else {
                space.normal
            };
            (g.mean, g.variance)
        })
        .unzip();
    GaussianSpec::diagonal(mean, var)
}

/// Distribution of `aᵀX` for `X ~ joint`.
pub fn project(a: &[f64], joint: &GaussianSpec) -> Result<Gaussian> {
    if a.len() != joint.dim() {
        return Err(Error::invalid(format!(
            "sensing vector has dimension {}, joint has {}",
            a.len(),
            joint.dim()
        )));
    }
    if a.iter().all(|&x| x == 0.0) {
        return Err(Error::DegenerateProjection("all-zero sensing vector".into()));
    }
    let a = DVector::from_column_slice(a);
    let mean = a.dot(joint.mean());
    let var = (joint.cov() * &a).dot(&a);
    if var < -1e-10 {
        return Err(Error::CovarianceNotPsd(format!("aᵀΣa = {var}")));
    }
    if var <= 0.0 {
        return Err(Error::DegenerateProjection(
            "projected variance is zero".into(),
        ));
    }
    Ok(Gaussian {
        mean,
        variance: var,
    })
}

/// One measurement: the sensing vector used and the realized value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub vector: Vec<f64>,
    pub value: f64,
}

/// The ordered measurements of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    records: Vec<Observation>,
}

impl ObservationSet {
    pub fn new(records: Vec<Observation>) -> Result<Self> {
        let Some(first) = records.first() else {
            return Err(Error::invalid("an observation set needs at least one record"));
        };
        let n = first.vector.len();
        if n == 0 {
            return Err(Error::invalid("sensing vectors must be non-empty"));
        }
        if let Some(j) = records.iter().position(|r| r.vector.len() != n) {
            return Err(Error::invalid(format!(
                "record {j} has dimension {}, expected {n}",
                records[j].vector.len()
            )));
        }
        Ok(ObservationSet { records })
    }

    pub fn records(&self) -> &[Observation] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.records[0].vector.len()
    }

    pub fn values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.value).collect()
    }

    /// Concatenation of two sets over the same dimension.
    pub fn concat(&self, other: &ObservationSet) -> Result<ObservationSet> {
        let mut records = self.records.clone();
        records.extend_from_slice(&other.records);
        ObservationSet::new(records)
    }
}

/// Draws `m` observations under hypothesis `h`.
///
/// Sensing vectors and the per-time-index realizations `X^j` come from two
/// independent streams derived from `seed`, so two strategies sampled with
/// the same seed see the same realizations of the variables.
pub fn sample_trial(
    space: &HypothesisSpace,
    h: &Hypothesis,
    strategy: &SensingStrategy,
    m: usize,
    seed: u64,
) -> Result<ObservationSet> {
    space.check(h)?;
    if m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    strategy.validate(space.n)?;
    let mut vector_rng = seed::rng(seed::derive(seed, &[stream::VECTORS]));
    let mut noise_rng = seed::rng(seed::derive(seed, &[stream::NOISE]));

    let (means, sds): (Vec<f64>, Vec<f64>) = (0..space.n)
        .map(|i| {
            let g = if h.contains(i) {
                space.abnormal
            } else {
                space.normal
            };
            (g.mean, g.std_dev())
        })
        .unzip();

    let mut records = Vec::with_capacity(m);
    for j in 0..m {
        let a = strategy.vector_at(j, &mut vector_rng);
        let mut y = 0.0;
        for i in 0..space.n {
            let z: f64 = StandardNormal.sample(&mut noise_rng);
            y += a[i] * (means[i] + sds[i] * z);
        }
        records.push(Observation {
            vector: a.to_vec(),
            value: y,
        });
    }
    ObservationSet::new(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chernoff::SensingEnsemble;
    use proptest::prelude::*;

    fn g(mean: f64, var: f64) -> Gaussian {
        Gaussian::new(mean, var).unwrap()
    }

    fn supports(hs: &[Hypothesis]) -> Vec<Vec<usize>> {
        hs.iter().map(|h| h.support().to_vec()).collect()
    }

    #[test]
    fn enumerate_small_cases() {
        assert_eq!(
            supports(&enumerate_hypotheses(3, 1).unwrap()),
            vec![vec![0], vec![1], vec![2]]
        );
        let h = enumerate_hypotheses(4, 2).unwrap();
        assert_eq!(h.len(), 6);
        assert_eq!(h[0].support(), &[0, 1]);
        assert_eq!(h[5].support(), &[2, 3]);
        assert_eq!(enumerate_hypotheses(7, 1).unwrap().len(), 7);
    }

    #[test]
    fn enumerate_rejects_bad_k_and_cap() {
        assert!(matches!(enumerate_hypotheses(3, 0), Err(Error::Domain(_))));
        assert!(matches!(enumerate_hypotheses(3, 3), Err(Error::Domain(_))));
        match enumerate_hypotheses_capped(30, 10, 1000) {
            Err(Error::CombinatorialOverflow { count, .. }) => assert_eq!(count, 30045015.0),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn enumerate_size_is_binomial(n in 2usize..=20, k in 1usize..=4) {
            prop_assume!(k < n);
            let hs = enumerate_hypotheses(n, k).unwrap();
            prop_assert_eq!(hs.len() as f64, binomial(n, k));
            prop_assert!(hs.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn moments_example_one() {
        let (a, b, s2) = (3.0, -1.0, 2.0);
        let space = HypothesisSpace::new(2, 1, g(b, s2), g(a, s2)).unwrap();
        let joint = hypothesis_moments(&space, &Hypothesis::new(vec![0], 2).unwrap()).unwrap();
        assert_eq!(joint.mean().as_slice(), &[a, b]);
        assert_eq!(joint.cov()[(0, 0)], s2);
        assert_eq!(joint.cov()[(1, 1)], s2);
        assert_eq!(joint.cov()[(0, 1)], 0.0);
    }

    #[test]
    fn moments_example_four() {
        let space = HypothesisSpace::new(7, 1, g(0.0, 1.0), g(0.0, 100.0)).unwrap();
        let joint = hypothesis_moments(&space, &Hypothesis::new(vec![6], 7).unwrap()).unwrap();
        let diag: Vec<f64> = joint.cov().diagonal().iter().copied().collect();
        assert_eq!(diag, vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 100.0]);
        let empty = Hypothesis::new(vec![], 7).unwrap();
        assert!(hypothesis_moments(&space, &empty).is_err());
    }

    #[test]
    fn projections() {
        let (a, b, s2) = (3.0, -1.0, 2.0);
        let joint = GaussianSpec::diagonal(vec![a, b], vec![s2, s2]).unwrap();
        assert_eq!(project(&[1.0, 0.0], &joint).unwrap(), g(a, s2));
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let p = project(&[r, -r], &joint).unwrap();
        assert!((p.mean - (a - b) * r).abs() < 1e-12);
        assert!((p.variance - s2).abs() < 1e-12);
        let p = project(&[1.0, 1.0], &joint).unwrap();
        assert_eq!(p, g(a + b, 2.0 * s2));
        assert!(matches!(
            project(&[0.0, 0.0], &joint),
            Err(Error::DegenerateProjection(_))
        ));
    }

    #[test]
    fn fast_projection_matches_matrix_route() {
        let space = HypothesisSpace::new(5, 2, g(1.0, 2.0), g(-3.0, 7.0)).unwrap();
        let a = [0.3, -1.2, 0.0, 2.0, 0.7];
        for h in space.hypotheses().unwrap() {
            let fast = space.project(&a, &h).unwrap();
            let slow = project(&a, &hypothesis_moments(&space, &h).unwrap()).unwrap();
            assert!((fast.mean - slow.mean).abs() < 1e-12);
            assert!((fast.variance - slow.variance).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_spec_invariants() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(GaussianSpec::new(DVector::zeros(2), asym).is_err());
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            GaussianSpec::new(DVector::zeros(2), indefinite),
            Err(Error::CovarianceNotPsd(_))
        ));
    }

    #[test]
    fn space_invariants() {
        assert!(HypothesisSpace::new(3, 0, g(0.0, 1.0), g(1.0, 1.0)).is_err());
        assert!(HypothesisSpace::new(3, 3, g(0.0, 1.0), g(1.0, 1.0)).is_err());
        assert!(HypothesisSpace::new(3, 1, g(0.0, 1.0), g(0.0, 1.0)).is_err());
        assert!(Gaussian::new(0.0, 0.0).is_err());
    }

    #[test]
    fn sample_trial_contracts() {
        let space = HypothesisSpace::new(4, 1, g(0.0, 1.0), g(5.0, 1.0)).unwrap();
        let h = Hypothesis::new(vec![2], 4).unwrap();
        let fixed = SensingStrategy::Fixed(vec![1.0, 0.0, 0.0, 0.0]);
        assert!(sample_trial(&space, &h, &fixed, 0, 1).is_err());
        let obs = sample_trial(&space, &h, &fixed, 10, 1).unwrap();
        assert!(obs.records().iter().all(|r| r.vector == vec![1.0, 0.0, 0.0, 0.0]));
        assert_eq!(obs, sample_trial(&space, &h, &fixed, 10, 1).unwrap());
        let other = sample_trial(&space, &h, &fixed, 10, 2).unwrap();
        assert_ne!(obs.records()[0].value, other.records()[0].value);
    }

    #[test]
    fn random_strategy_draws_from_ensemble() {
        let space = HypothesisSpace::new(3, 1, g(0.0, 1.0), g(5.0, 1.0)).unwrap();
        let h = Hypothesis::new(vec![0], 3).unwrap();
        let ens = SensingEnsemble::new(
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 1.0]],
            vec![0.25, 0.75],
        )
        .unwrap();
        let obs = sample_trial(&space, &h, &SensingStrategy::Random(ens), 4000, 9).unwrap();
        let first = obs
            .records()
            .iter()
            .filter(|r| r.vector[0] == 1.0)
            .count() as f64;
        assert!((first / 4000.0 - 0.25).abs() < 0.03);
    }

    #[test]
    fn sampling_moments_match_projection() {
        // 1e5 samples: empirical mean and variance within 5 standard errors.
        let space = HypothesisSpace::new(3, 1, g(1.0, 2.0), g(-2.0, 9.0)).unwrap();
        let h = Hypothesis::new(vec![1], 3).unwrap();
        let a = vec![0.5, -1.0, 2.0];
        let analytic = space.project(&a, &h).unwrap();
        let n = 100_000;
        let obs = sample_trial(&space, &h, &SensingStrategy::Fixed(a), n, 42).unwrap();
        let ys = obs.values();
        let mean = ys.iter().sum::<f64>() / n as f64;
        let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se_mean = (analytic.variance / n as f64).sqrt();
        let se_var = analytic.variance * (2.0 / (n - 1) as f64).sqrt();
        assert!((mean - analytic.mean).abs() < 5.0 * se_mean, "{mean} vs {}", analytic.mean);
        assert!((var - analytic.variance).abs() < 5.0 * se_var, "{var} vs {}", analytic.variance);
    }
}
