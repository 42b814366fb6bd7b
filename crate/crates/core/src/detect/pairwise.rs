use super::{DetectionResult, LikelihoodTable, Method};
use crate::error::Result;
use crate::model::{HypothesisSpace, ObservationSet};

/// Pairwise Neyman–Pearson tournament with log-threshold 0.
pub fn pairwise_np(space: &HypothesisSpace, obs: &ObservationSet) -> Result<DetectionResult> {
    pairwise_np_with_threshold(space, obs, 0.0)
}

/// Pairwise tournament where, for supports `v < w` in lexicographic order,
/// `v` wins iff `ln p_v(y) − ln p_w(y) ≥ threshold`. The winner must win
/// every one of its matches; otherwise the result is a failure.
///
/// At threshold 0 every match follows the likelihood order, so the winner
/// always exists and equals the LRT choice. Other thresholds can create
/// cycles.
pub fn pairwise_np_with_threshold(
    space: &HypothesisSpace,
    obs: &ObservationSet,
    threshold: f64,
) -> Result<DetectionResult> {
    let hyps = space.hypotheses()?;
    let table = LikelihoodTable::new(space, obs)?;
    let scores = hyps
        .iter()
        .map(|h| table.log_likelihood(h.support()))
        .collect::<Result<Vec<f64>>>()?;
    let beats = |a: usize, b: usize| {
        if a < b {
            scores[a] - scores[b] >= threshold
        } else {
            scores[b] - scores[a] < threshold
        }
    };
    // Only a universal winner can survive a knockout pass; verify it after.
    let mut candidate = 0;
    for j in 1..hyps.len() {
        if beats(j, candidate) {
            candidate = j;
        }
    }
    let winner = (0..hyps.len())
        .all(|j| j == candidate || beats(candidate, j))
        .then(|| hyps[candidate].clone());
    Ok(DetectionResult {
        method: Method::Pairwise,
        support: winner,
        scores,
        iterations: 0,
        tied: false,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::SensingStrategy;
    use crate::detect::lrt_full;
    use crate::model::{sample_trial, Gaussian, Hypothesis, Observation};
    use proptest::prelude::*;

    fn g(mean: f64, var: f64) -> Gaussian {
        Gaussian::new(mean, var).unwrap()
    }

    /// Observations whose log-likelihoods under `{0}`, `{1}`, `{2}` are
    /// `ll0 + (0, d1, d2)` for a mean-shift model with coordinate vectors.
    fn three_way(d1: f64, d2: f64) -> (HypothesisSpace, ObservationSet) {
        // With f1 = N(0,1), f2 = N(1,1) and one observation of each
        // coordinate, ll_v − ll_0 = y_v − y_0.
        let space = HypothesisSpace::new(3, 1, g(0.0, 1.0), g(1.0, 1.0)).unwrap();
        let ys = [0.0, d1, d2];
        let records = (0..3)
            .map(|i| Observation {
                vector: (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect(),
                value: ys[i],
            })
            .collect();
        (space, ObservationSet::new(records).unwrap())
    }

    #[test]
    fn cycle_yields_failure() {
        let (space, obs) = three_way(0.5, 1.4);
        let r = pairwise_np_with_threshold(&space, &obs, -1.0).unwrap();
        assert!(r.is_failure());
        let r = pairwise_np(&space, &obs).unwrap();
        assert_eq!(r.support.unwrap().support(), &[2]);
    }

    #[test]
    fn two_hypotheses_match_lrt() {
        let space = HypothesisSpace::new(2, 1, g(0.0, 1.0), g(1.0, 4.0)).unwrap();
        let strategy = SensingStrategy::Fixed(vec![0.7, -0.3]);
        for seed in 0..50 {
            let truth = Hypothesis::new(vec![(seed % 2) as usize], 2).unwrap();
            let obs = sample_trial(&space, &truth, &strategy, 3, seed).unwrap();
            assert_eq!(
                pairwise_np(&space, &obs).unwrap().support,
                lrt_full(&space, &obs).unwrap().support
            );
        }
    }

    proptest! {
        #[test]
        fn winner_is_never_ranked_below_a_hypothesis_it_beat(
            d1 in -3.0f64..3.0, d2 in -3.0f64..3.0, t in -2.0f64..2.0,
        ) {
            let (space, obs) = three_way(d1, d2);
            let r = pairwise_np_with_threshold(&space, &obs, t).unwrap();
            if let Some(w) = r.support {
                let lrt = lrt_full(&space, &obs).unwrap();
                if t == 0.0 {
                    prop_assert_eq!(Some(w.clone()), lrt.support);
                }
                let wi = w.support()[0];
                // Every other hypothesis lost to w, consistent with the rule.
                for j in 0..3 {
                    if j == wi { continue; }
                    let diff = r.scores[wi.min(j)] - r.scores[wi.max(j)];
                    prop_assert_eq!(diff >= t, wi < j);
                }
            }
        }
    }
}
