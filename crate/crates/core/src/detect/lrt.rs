use super::{nearly_equal, DetectionResult, LikelihoodTable, Method};
use crate::error::Result;
use crate::model::{HypothesisSpace, ObservationSet};

/// Maximum-likelihood choice over all `C(n,k)` supports. Ties go to the
/// lexicographically smallest support and are flagged.
pub fn lrt_full(space: &HypothesisSpace, obs: &ObservationSet) -> Result<DetectionResult> {
    let hyps = space.hypotheses()?;
    let table = LikelihoodTable::new(space, obs)?;
    let scores = hyps
        .iter()
        .map(|h| table.log_likelihood(h.support()))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    let tied = scores
        .iter()
        .enumerate()
        .any(|(i, &s)| i != best && nearly_equal(s, scores[best]));
    Ok(DetectionResult {
        method: Method::Lrt,
        support: Some(hyps[best].clone()),
        scores,
        iterations: 0,
        tied,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{hamming74_rows, separate_baseline, SensingStrategy};
    use crate::model::{sample_trial, Gaussian, Hypothesis, Observation};

    fn g(mean: f64, var: f64) -> Gaussian {
        Gaussian::new(mean, var).unwrap()
    }

    #[test]
    fn noiseless_separate_recovers_support() {
        let space = HypothesisSpace::new(6, 2, g(0.0, 1e-9), g(8.0, 1e-9)).unwrap();
        let truth = Hypothesis::new(vec![1, 4], 6).unwrap();
        let strategy = separate_baseline(6, 6, 0).unwrap();
        let obs = sample_trial(&space, &truth, &strategy, 6, 3).unwrap();
        let r = lrt_full(&space, &obs).unwrap();
        assert_eq!(r.support, Some(truth));
        assert!(!r.tied);
    }

    #[test]
    fn equidistant_tie_goes_to_first_support() {
        let space = HypothesisSpace::new(3, 1, g(0.0, 1.0), g(2.0, 1.0)).unwrap();
        let obs = ObservationSet::new(vec![Observation {
            vector: vec![0.0, 1.0, 1.0],
            value: 2.0,
        }])
        .unwrap();
        let r = lrt_full(&space, &obs).unwrap();
        assert_eq!(r.support.unwrap().support(), &[1]);
        assert!(r.tied);
    }

    #[test]
    fn hamming_schedule_matches_direct_density_product() {
        let space = HypothesisSpace::new(7, 1, g(0.0, 1.0), g(0.0, 100.0)).unwrap();
        let strategy = SensingStrategy::Schedule(hamming74_rows());
        for seed in 0..20u64 {
            let truth = Hypothesis::new(vec![(seed % 7) as usize], 7).unwrap();
            let obs = sample_trial(&space, &truth, &strategy, 30, seed).unwrap();
            let r = lrt_full(&space, &obs).unwrap();
            // Oracle: product of densities evaluated one hypothesis at a time.
            let mut best = (f64::NEG_INFINITY, 0);
            for v in 0..7 {
                let mut p = 1.0f64;
                let mut scale = 0.0;
                for rec in obs.records() {
                    let var: f64 = rec
                        .vector
                        .iter()
                        .enumerate()
                        .map(|(i, a)| a * a * if i == v { 100.0 } else { 1.0 })
                        .sum();
                    let d = (-(rec.value * rec.value) / (2.0 * var)).exp()
                        / (2.0 * std::f64::consts::PI * var).sqrt();
                    p *= d;
                    if p < 1e-200 {
                        p *= 1e200;
                        scale -= 200.0 * std::f64::consts::LN_10;
                    }
                }
                let ll = p.ln() + scale;
                if ll > best.0 {
                    best = (ll, v);
                }
            }
            assert_eq!(r.support.unwrap().support(), &[best.1], "seed {seed}");
        }
    }
}
