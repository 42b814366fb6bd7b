use nalgebra::{DMatrix, DVector};

use super::{top_k, DetectionResult, Method};
use crate::error::{Error, Result};
use crate::model::{HypothesisSpace, ObservationSet};

const TOL: f64 = 1e-8;
const MAX_SWEEPS: usize = 10_000;

fn soft(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Minimizes `½‖y − Ax‖² + λ‖x‖₁` by cyclic coordinate descent with
/// soft-thresholding, stopping when no coordinate moves by more than 1e-8.
pub fn lasso_solve(a: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!("lambda must be non-negative, got {lambda}")));
    }
    if a.nrows() != y.len() {
        return Err(Error::invalid(format!(
            "matrix has {} rows but y has {} entries",
            a.nrows(),
            y.len()
        )));
    }
    let n = a.ncols();
    let col_sq: Vec<f64> = (0..n).map(|j| a.column(j).norm_squared()).collect();
    let mut x: DVector<f64> = DVector::zeros(n);
    let mut r = y.clone();
    for _ in 0..MAX_SWEEPS {
        let mut max_change = 0.0f64;
        for j in 0..n {
            if col_sq[j] == 0.0 {
                continue;
            }
            let col = a.column(j);
            let rho = col.dot(&r) + col_sq[j] * x[j];
            let new = soft(rho, lambda) / col_sq[j];
            let delta: f64 = new - x[j];
            if delta != 0.0 {
                r.axpy(-delta, &col, 1.0);
                x[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < TOL {
            return Ok(x);
        }
    }
    Err(Error::IterationLimit {
        iterations: MAX_SWEEPS,
        last: x.iter().copied().collect(),
    })
}

/// `σ₁ · max_j ‖a^j‖ · √(2 ln n) · max_i ‖A_i‖`: the noise level of a
/// centred measurement times the usual universal threshold, scaled by the
/// largest column norm.
pub fn default_lasso_lambda(space: &HypothesisSpace, a: &DMatrix<f64>) -> f64 {
    let row = (0..a.nrows()).map(|j| a.row(j).norm()).fold(0.0, f64::max);
    let col = (0..a.ncols()).map(|i| a.column(i).norm()).fold(0.0, f64::max);
    space.normal.std_dev() * row * (2.0 * (space.n as f64).ln()).sqrt() * col
}

/// Support estimate from the `k` largest `|x̂_i|`, after subtracting the
/// all-normal baseline `μ₁·A·1` from the observations.
pub fn lasso_detect(
    space: &HypothesisSpace,
    obs: &ObservationSet,
    lambda: Option<f64>,
) -> Result<DetectionResult> {
    if space.abnormal.mean == space.normal.mean {
        return Err(Error::domain(
            "LASSO detection needs a mean difference between normal and abnormal",
        ));
    }
    if obs.dim() != space.n {
        return Err(Error::invalid("observation dimension does not match n"));
    }
    let m = obs.len();
    let a = DMatrix::from_fn(m, space.n, |j, i| obs.records()[j].vector[i]);
    let y = DVector::from_fn(m, |j, _| {
        let r = &obs.records()[j];
        r.value - space.normal.mean * r.vector.iter().sum::<f64>()
    });
    let lambda = lambda.unwrap_or_else(|| default_lasso_lambda(space, &a));
    let x = lasso_solve(&a, &y, lambda)?;
    let scores: Vec<f64> = x.iter().copied().collect();
    let magnitude: Vec<f64> = scores.iter().map(|v| v.abs()).collect();
    let (support, tied) = top_k(&magnitude, space.k);
    Ok(DetectionResult {
        method: Method::Lasso,
        support: Some(crate::model::Hypothesis::new(support, space.n)?),
        scores,
        iterations: 0,
        tied,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Gaussian, Observation};
    use proptest::prelude::*;
    use rand::Rng;

    fn objective(a: &DMatrix<f64>, y: &DVector<f64>, x: &DVector<f64>, l: f64) -> f64 {
        0.5 * (y - a * x).norm_squared() + l * x.lp_norm(1)
    }

    fn subgradient_gap(a: &DMatrix<f64>, y: &DVector<f64>, x: &DVector<f64>, l: f64) -> f64 {
        let g = a.transpose() * (y - a * x);
        (0..x.len())
            .map(|j| {
                if x[j] != 0.0 {
                    (g[j] - l * x[j].signum()).abs()
                } else {
                    (g[j].abs() - l).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn zero_penalty_is_least_squares() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.1, 1.5, 0.3, -0.2, 0.0, 1.0]);
        let y = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let x = lasso_solve(&a, &y, 0.0).unwrap();
        let exact = a.clone().lu().solve(&y).unwrap();
        assert!((x - exact).amax() < 1e-6);
    }

    #[test]
    fn identity_design_soft_thresholds() {
        let a = DMatrix::identity(4, 4);
        let y = DVector::from_vec(vec![10.0, 0.1, -3.0, 0.9]);
        let x = lasso_solve(&a, &y, 1.0).unwrap();
        assert_eq!(x.as_slice(), &[9.0, 0.0, -2.0, 0.0]);
    }

    #[test]
    fn orthogonal_columns_closed_form() {
        // Columns are orthogonal with different norms.
        let a = DMatrix::from_row_slice(4, 3, &[1.0, 2.0, 0.0, 1.0, -2.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0]);
        let y = DVector::from_vec(vec![4.0, 1.0, -2.0, 7.0]);
        let l = 1.5;
        let x = lasso_solve(&a, &y, l).unwrap();
        let aty = a.transpose() * &y;
        for i in 0..3 {
            let c = a.column(i).norm_squared();
            let expected = soft(aty[i] / c, l / c);
            assert!((x[i] - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_negative_lambda() {
        let a = DMatrix::identity(2, 2);
        assert!(lasso_solve(&a, &DVector::zeros(2), -1.0).is_err());
    }

    proptest! {
        #[test]
        fn optimality_and_descent(seed: u64, m in 3usize..12, n in 2usize..10, l in 0.01f64..3.0) {
            let mut rng = crate::seed::rng(seed);
            let a = DMatrix::from_fn(m, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let y = DVector::from_fn(m, |_, _| rng.random::<f64>() * 4.0 - 2.0);
            let x = lasso_solve(&a, &y, l).unwrap();
            prop_assert!(subgradient_gap(&a, &y, &x, l) < 1e-6);
            prop_assert!(objective(&a, &y, &x, l) <= objective(&a, &y, &DVector::zeros(n), l) + 1e-12);
        }
    }

    #[test]
    fn variance_only_anomaly_is_rejected() {
        let g = |m, v| Gaussian::new(m, v).unwrap();
        let space = HypothesisSpace::new(3, 1, g(0.0, 1.0), g(0.0, 9.0)).unwrap();
        let obs = ObservationSet::new(vec![Observation { vector: vec![1.0, 0.0, 0.0], value: 1.0 }]).unwrap();
        assert!(matches!(lasso_detect(&space, &obs, None), Err(Error::Domain(_))));
    }

    #[test]
    fn dominant_coordinate_is_selected() {
        let g = |m, v| Gaussian::new(m, v).unwrap();
        let space = HypothesisSpace::new(3, 1, g(1.0, 1.0), g(9.0, 1.0)).unwrap();
        let records = (0..3)
            .map(|i| Observation {
                vector: (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect(),
                value: if i == 2 { 9.0 } else { 1.0 },
            })
            .collect();
        let obs = ObservationSet::new(records).unwrap();
        let r = lasso_detect(&space, &obs, Some(0.5)).unwrap();
        assert_eq!(r.support.unwrap().support(), &[2]);
        assert!((r.scores[2] - 7.5).abs() < 1e-9);
    }
}
