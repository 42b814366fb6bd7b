use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{enumerate_hypotheses_capped, project, GaussianSpec, HypothesisSpace, ObservationSet};

const EXACT_K_CAP: usize = 10_000;
const BERNOULLI_MAX_N: usize = 20;

/// Prior over anomaly sets used by the exhaustive posterior.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorModel {
    /// Uniform over the `C(n,k)` supports of size exactly `k`.
    #[default]
    ExactK,
    /// Each variable abnormal independently with probability `k/n`: the
    /// prior message passing works with, over all `2^n` subsets.
    Bernoulli,
}

/// Per-variable posterior probability of being abnormal, by brute-force
/// enumeration. Likelihoods are evaluated through the full joint moments and
/// a matrix projection, independently of the detectors' fast path.
pub fn mp_exact_posterior(space: &HypothesisSpace, obs: &ObservationSet, prior: PriorModel) -> Result<Vec<f64>> {
    let n = space.n;
    if obs.dim() != n {
        return Err(Error::invalid("observation dimension does not match n"));
    }
    let supports: Vec<(Vec<usize>, f64)> = match prior {
        PriorModel::ExactK => enumerate_hypotheses_capped(n, space.k, EXACT_K_CAP)?
            .into_iter()
            .map(|h| (h.support().to_vec(), 0.0))
            .collect(),
        PriorModel::Bernoulli => {
            if n > BERNOULLI_MAX_N {
                return Err(Error::CombinatorialOverflow {
                    n,
                    k: space.k,
                    count: 2f64.powi(n as i32),
                    cap: 1 << BERNOULLI_MAX_N,
                });
            }
            let p = space.k as f64 / n as f64;
            (0u32..1 << n)
                .map(|mask| {
                    let s: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                    let lp = s.len() as f64 * p.ln() + (n - s.len()) as f64 * (1.0 - p).ln();
                    (s, lp)
                })
                .collect()
        }
    };

    let mut log_post = Vec::with_capacity(supports.len());
    for (s, lp) in &supports {
        let (mean, var): (Vec<f64>, Vec<f64>) = (0..n)
            .map(|i| {
                let g = if s.contains(&i) { space.abnormal } else { space.normal };
                (g.mean, g.variance)
            })
            .unzip();
        let joint = GaussianSpec::diagonal(mean, var)?;
        let mut ll = *lp;
        for r in obs.records() {
            ll += project(&r.vector, &joint)?.ln_pdf(r.value);
        }
        log_post.push(ll);
    }
    let max = log_post.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_post.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut marginals = vec![0.0; n];
    for ((s, _), w) in supports.iter().zip(&weights) {
        for &i in s {
            marginals[i] += w / total;
        }
    }
    Ok(marginals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::SensingStrategy;
    use crate::detect::{lrt_full, mp_detect, MpParams};
    use crate::model::{sample_trial, Gaussian, Hypothesis, Observation};
    use rand::Rng;

    fn g(mean: f64, var: f64) -> Gaussian {
        Gaussian::new(mean, var).unwrap()
    }

    #[test]
    fn uninformative_observations_give_prior() {
        let space = HypothesisSpace::new(4, 2, g(0.0, 1.0), g(3.0, 2.0)).unwrap();
        let obs = ObservationSet::new(vec![Observation { vector: vec![1.0; 4], value: 4.0 }]).unwrap();
        let m = mp_exact_posterior(&space, &obs, PriorModel::ExactK).unwrap();
        for p in m {
            assert!((p - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn decisive_observation() {
        let space = HypothesisSpace::new(2, 1, g(0.0, 1.0), g(50.0, 1.0)).unwrap();
        let obs = ObservationSet::new(vec![Observation { vector: vec![1.0, 0.0], value: 50.0 }]).unwrap();
        let m = mp_exact_posterior(&space, &obs, PriorModel::ExactK).unwrap();
        assert!((m[0] - 1.0).abs() < 1e-12 && m[1] < 1e-12);
    }

    #[test]
    fn argmax_agrees_with_lrt() {
        let space = HypothesisSpace::new(6, 1, g(0.0, 1.0), g(1.5, 2.0)).unwrap();
        let strategy = SensingStrategy::Fixed(vec![1.0, 0.5, -0.3, 0.1, 2.0, 1.0]);
        let mut rng = crate::seed::rng(5);
        for seed in 0..50 {
            let truth = Hypothesis::new(vec![rng.random_range(0..6)], 6).unwrap();
            let obs = sample_trial(&space, &truth, &strategy, 5, seed).unwrap();
            let lrt = lrt_full(&space, &obs).unwrap();
            let m = mp_exact_posterior(&space, &obs, PriorModel::ExactK).unwrap();
            let best = (0..6).fold(0, |b, i| if m[i] > m[b] { i } else { b });
            assert_eq!(lrt.support.unwrap().support(), &[best], "seed {seed}");
            assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn mp_is_exact_on_a_chain() {
        // Checks {0,1}, {1,2}, {2,3}: a tree.
        let space = HypothesisSpace::new(4, 1, g(0.0, 1.0), g(2.0, 1.0)).unwrap();
        let rows = [[1.0, 1.0, 0.0, 0.0], [0.0, 1.0, 1.0, 0.0], [0.0, 0.0, 1.0, 1.0]];
        let values = [2.3, 0.4, -0.7];
        let obs = ObservationSet::new(
            rows.iter()
                .zip(values)
                .map(|(r, value)| Observation { vector: r.to_vec(), value })
                .collect(),
        )
        .unwrap();
        let exact = mp_exact_posterior(&space, &obs, PriorModel::Bernoulli).unwrap();
        let mp = mp_detect(&space, &obs, &MpParams::default()).unwrap();
        assert!(mp.converged);
        for i in 0..4 {
            assert!((mp.scores[i] - exact[i]).abs() < 1e-6, "{i}: {} vs {}", mp.scores[i], exact[i]);
        }
    }
}
