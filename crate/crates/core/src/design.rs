//! Sensing strategies and sensing-vector design: Hamming parity rows, sparse
//! bipartite graphs, the separate-observation baseline, optimal vectors for
//! two Gaussian hypotheses, and the pairwise-difference mixture for a single
//! mean anomaly.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chernoff::{variance_ratio_alpha, variance_ratio_chernoff, SensingEnsemble};
use crate::error::{Error, Result};
use crate::seed;

/// How the sensing vector for time index `j` is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum SensingStrategy {
    /// The same vector at every time index.
    Fixed(Vec<f64>),
    /// An independent draw from the ensemble at every time index.
    Random(SensingEnsemble),
    /// Vector `j mod len` at time index `j`.
    Schedule(Vec<Vec<f64>>),
}

impl SensingStrategy {
    pub fn validate(&self, n: usize) -> Result<()> {
        let vectors: &[Vec<f64>] = match self {
            SensingStrategy::Fixed(a) => std::slice::from_ref(a),
            SensingStrategy::Random(e) => e.vectors(),
            SensingStrategy::Schedule(s) => s,
        };
        if vectors.is_empty() {
            return Err(Error::invalid("schedule must contain at least one vector"));
        }
        for (i, a) in vectors.iter().enumerate() {
            if a.len() != n {
                return Err(Error::invalid(format!(
                    "sensing vector {i} has dimension {}, expected {n}",
                    a.len()
                )));
            }
            if a.iter().all(|&x| x == 0.0) {
                return Err(Error::DegenerateProjection(format!(
                    "sensing vector {i} is all zero"
                )));
            }
            if a.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("sensing vector {i} is not finite")));
            }
        }
        Ok(())
    }

    /// The vector used at time index `j`. Only [`SensingStrategy::Random`]
    /// consumes randomness.
    pub fn vector_at<'a, R: Rng + ?Sized>(&'a self, j: usize, rng: &mut R) -> &'a [f64] {
        match self {
            SensingStrategy::Fixed(a) => a,
            SensingStrategy::Schedule(s) => &s[j % s.len()],
            SensingStrategy::Random(e) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let probs = e.probabilities();
                for (i, &p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return &e.vectors()[i];
                    }
                }
                let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
                &e.vectors()[last]
            }
        }
    }

    /// The empirical distribution of sensing vectors: the ensemble itself for
    /// random strategies, one period with equal weights for schedules.
    pub fn ensemble(&self) -> Result<SensingEnsemble> {
        match self {
            SensingStrategy::Fixed(a) => SensingEnsemble::single(a.clone()),
            SensingStrategy::Random(e) => Ok(e.clone()),
            SensingStrategy::Schedule(s) => SensingEnsemble::uniform(s.clone()),
        }
    }

    /// The first `m` vectors of a deterministic strategy.
    pub fn prefix(&self, m: usize) -> Result<Vec<Vec<f64>>> {
        match self {
            SensingStrategy::Fixed(a) => Ok(vec![a.clone(); m]),
            SensingStrategy::Schedule(s) => Ok((0..m).map(|j| s[j % s.len()].clone()).collect()),
            SensingStrategy::Random(_) => Err(Error::invalid(
                "a random strategy has no deterministic prefix",
            )),
        }
    }
}

/// Parity-check matrix of the (7,4) Hamming code.
pub fn hamming74_rows() -> Vec<Vec<f64>> {
    [
        [1, 0, 0, 1, 1, 0, 1],
        [0, 1, 0, 1, 0, 1, 1],
        [0, 0, 1, 0, 1, 1, 1],
    ]
    .iter()
    .map(|r| r.iter().map(|&x| x as f64).collect())
    .collect()
}

/// A 0/1 measurement matrix where row `j` selects the variables summed by
/// measurement `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteDesign {
    n: usize,
    rows: Vec<Vec<usize>>,
    check_degree: usize,
}

impl BipartiteDesign {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn check_degree(&self) -> usize {
        self.check_degree
    }

    /// Sorted variable indices of each measurement.
    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn column_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for row in &self.rows {
            for &i in row {
                deg[i] += 1;
            }
        }
        deg
    }

    /// The common column degree, if all columns agree.
    pub fn variable_degree(&self) -> Option<usize> {
        let deg = self.column_degrees();
        deg.iter().all(|&d| d == deg[0]).then_some(deg[0])
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|row| {
                let mut v = vec![0.0; self.n];
                for &i in row {
                    v[i] = 1.0;
                }
                v
            })
            .collect()
    }

    pub fn to_strategy(&self) -> SensingStrategy {
        SensingStrategy::Schedule(self.matrix())
    }
}

/// Random bipartite graph with `m` measurement nodes of degree `check_degree`
/// over `n` variable nodes, built by shuffling edge sockets.
///
/// In strict mode every variable gets degree `check_degree·m/n`, which must be
/// an integer. With `near_regular` the leftover sockets go to distinct,
/// uniformly chosen variables so degrees differ by at most one. A measurement
/// that receives the same variable twice has the duplicate swapped with a
/// socket from another measurement.
pub fn sparse_bipartite(
    n: usize,
    m: usize,
    check_degree: usize,
    seed: u64,
    near_regular: bool,
) -> Result<BipartiteDesign> {
    if n == 0 || m == 0 {
        return Err(Error::Config("n and m must be positive".into()));
    }
    if check_degree == 0 || check_degree > n {
        return Err(Error::Config(format!(
            "check degree must be in 1..={n}, got {check_degree}"
        )));
    }
    let edges = check_degree * m;
    let (base, extra) = (edges / n, edges % n);
    if extra != 0 && !near_regular {
        return Err(Error::Config(format!(
            "variable degree {check_degree}m/n = {check_degree}*{m}/{n} is not an integer; \
             choose m divisible by {} or enable near-regular mode",
            n / gcd(n, check_degree)
        )));
    }
    let mut rng = seed::rng(seed);
    let mut sockets: Vec<usize> = Vec::with_capacity(edges);
    for i in 0..n {
        sockets.extend(std::iter::repeat_n(i, base));
    }
    sockets.extend(rand::seq::index::sample(&mut rng, n, extra).into_iter());
    sockets.shuffle(&mut rng);

    let d = check_degree;
    let count = |s: &[usize], r: usize, v: usize| s[r * d..(r + 1) * d].iter().filter(|&&x| x == v).count();
    let mut budget = 1000 * edges + 10_000;
    loop {
        let dup = (0..m).find_map(|r| {
            let row = &sockets[r * d..(r + 1) * d];
            (1..d).find(|&p| row[..p].contains(&row[p])).map(|p| (r, r * d + p))
        });
        let Some((r, pos)) = dup else { break };
        // Swap the duplicate with a random socket elsewhere, accepting any
        // swap that does not increase the total number of repeated edges.
        loop {
            if budget == 0 {
                return Err(Error::Numeric(
                    "could not remove repeated edges from the bipartite graph".into(),
                ));
            }
            budget -= 1;
            let other = rng.random_range(0..edges);
            let r2 = other / d;
            let (x, y) = (sockets[pos], sockets[other]);
            if r2 == r || x == y {
                continue;
            }
            let removed = 1 + usize::from(count(&sockets, r2, y) >= 2);
            let added = usize::from(count(&sockets, r, y) >= 1) + usize::from(count(&sockets, r2, x) >= 1);
            if added <= removed {
                sockets.swap(pos, other);
                break;
            }
        }
    }
    let rows = sockets
        .chunks(d)
        .map(|c| {
            let mut r = c.to_vec();
            r.sort_unstable();
            r
        })
        .collect();
    Ok(BipartiteDesign {
        n,
        rows,
        check_degree,
    })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// `⌊m/n⌋` coordinate observations of every variable, then one more of each
/// of `m mod n` distinct variables chosen uniformly at random.
pub fn separate_baseline(n: usize, m: usize, seed: u64) -> Result<SensingStrategy> {
    if n == 0 || m == 0 {
        return Err(Error::invalid("n and m must be positive"));
    }
    let mut schedule = Vec::with_capacity(m);
    for _ in 0..m / n {
        schedule.extend((0..n).map(|i| unit(n, i)));
    }
    let mut rng = seed::rng(seed);
    let mut extra = rand::seq::index::sample(&mut rng, n, m % n).into_vec();
    extra.sort_unstable();
    schedule.extend(extra.into_iter().map(|i| unit(n, i)));
    Ok(SensingStrategy::Schedule(schedule))
}

fn cholesky(m: &DMatrix<f64>, name: &str) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    if !m.is_square() {
        return Err(Error::invalid(format!("{name} must be square")));
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::invalid(format!("{name} is not symmetric")));
            }
        }
    }
    m.clone()
        .cholesky()
        .ok_or_else(|| Error::Decomposition(format!("{name} is not positive definite")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqualCovOptimum {
    /// Solves `Σa = μ1 − μ2`.
    pub vector: DVector<f64>,
    /// `⅛ (μ1−μ2)ᵀ Σ⁻¹ (μ1−μ2)`
    pub exponent: f64,
}

/// Sensing vector maximizing the Chernoff information between `N(μ1, Σ)` and
/// `N(μ2, Σ)`.
pub fn optimal_vector_equal_cov(
    mu1: &DVector<f64>,
    mu2: &DVector<f64>,
    sigma: &DMatrix<f64>,
) -> Result<EqualCovOptimum> {
    if mu1.len() != mu2.len() || sigma.nrows() != mu1.len() {
        return Err(Error::invalid("dimension mismatch between means and covariance"));
    }
    let chol = cholesky(sigma, "covariance")?;
    let diff = mu1 - mu2;
    if diff.amax() == 0.0 {
        return Err(Error::Indistinguishable(
            "equal means and covariances: no sensing vector separates them".into(),
        ));
    }
    let vector = chol.solve(&diff);
    let exponent = diff.dot(&vector) / 8.0;
    Ok(EqualCovOptimum { vector, exponent })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualMeanOptimum {
    /// Unit norm, largest-magnitude component positive.
    pub vector: Vec<f64>,
    /// `max(aᵀΣ1a / aᵀΣ2a, aᵀΣ2a / aᵀΣ1a)` at the optimum.
    pub ratio: f64,
    pub exponent: f64,
    /// Optimal exponent weight on the smaller projected variance.
    pub alpha: f64,
    /// True when the optimal ratio is attained in more than one direction.
    pub tie: bool,
}

/// Sensing vector maximizing the Chernoff information between `N(0, Σ1)` and
/// `N(0, Σ2)`: the generalized eigenvector of `(Σ1, Σ2)` with the most
/// extreme eigenvalue, found by whitening with the Cholesky factor of `Σ2`.
pub fn optimal_vector_equal_mean(
    sigma1: &DMatrix<f64>,
    sigma2: &DMatrix<f64>,
) -> Result<EqualMeanOptimum> {
    if sigma1.shape() != sigma2.shape() {
        return Err(Error::invalid("covariances differ in shape"));
    }
    cholesky(sigma1, "Σ1")?;
    let l2 = cholesky(sigma2, "Σ2")?.l();
    let l2_inv = l2
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Decomposition("Cholesky factor is singular".into()))?;
    let whitened = &l2_inv * sigma1 * l2_inv.transpose();
    let whitened = (&whitened + whitened.transpose()) * 0.5;
    let eig = whitened.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (lo, hi) = (order[0], order[n - 1]);
    let (e_min, e_max) = (eig.eigenvalues[lo], eig.eigenvalues[hi]);
    if !(e_min > 0.0) {
        return Err(Error::Decomposition(format!(
            "non-positive generalized eigenvalue {e_min}"
        )));
    }
    let up = e_max;
    let down = 1.0 / e_min;
    let ratio = up.max(down);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs());
    let multiplicity = if up >= down {
        eig.eigenvalues.iter().filter(|&&e| close(e, e_max)).count()
    } else {
        eig.eigenvalues.iter().filter(|&&e| close(e, e_min)).count()
    };
    let tie = ratio > 1.0 && (close(up, down) || multiplicity > 1);
    let pick = if up >= down { hi } else { lo };
    let u = eig.eigenvectors.column(pick).into_owned();
    let mut a = l2_inv.transpose() * u;
    a /= a.norm();
    let lead = a.iter().copied().fold(0.0f64, |best, x| {
        if x.abs() > best.abs() + 1e-12 {
            x
        } else {
            best
        }
    });
    if lead < 0.0 {
        a = -a;
    }
    Ok(EqualMeanOptimum {
        vector: a.iter().copied().collect(),
        ratio,
        exponent: variance_ratio_chernoff(ratio)?,
        alpha: variance_ratio_alpha(ratio)?,
        tie,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationDesign {
    /// `[1/√2, −1/√2, 0, …, 0]`
    pub a_star: Vec<f64>,
    /// Uniform over the pair vectors `(e_i − e_j)/√2`, `i < j`.
    pub ensemble: SensingEnsemble,
    /// Uniform over the coordinate vectors `e_i`.
    pub separate: SensingEnsemble,
    /// `(μ1−μ2)² / (4σ²(n−1))`
    pub mixed_exponent: f64,
    /// `(μ1−μ2)² / (4σ²n)`
    pub separate_exponent: f64,
}

/// The random-permutation design for one mean anomaly among `n` variables of
/// common variance `σ²`, alongside the separate-observation ensemble.
///
/// Permutations of `a_star` only matter through the ordered support pair, and
/// the pairwise exponents are unchanged by flipping the sign of a vector, so
/// the mixture is stored over the `n(n−1)/2` unordered pairs.
pub fn permutation_design(n: usize, mu1: f64, mu2: f64, variance: f64) -> Result<PermutationDesign> {
    if n < 2 {
        return Err(Error::domain(format!("need n >= 2, got {n}")));
    }
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::domain(format!("variance must be positive, got {variance}")));
    }
    if mu1 == mu2 || !(mu1 - mu2).is_finite() {
        return Err(Error::domain("means must differ"));
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut a_star = vec![0.0; n];
    a_star[0] = r;
    a_star[1] = -r;
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let mut v = vec![0.0; n];
            v[i] = r;
            v[j] = -r;
            pairs.push(v);
        }
    }
    let d2 = (mu1 - mu2).powi(2);
    Ok(PermutationDesign {
        a_star,
        ensemble: SensingEnsemble::uniform(pairs)?,
        separate: SensingEnsemble::uniform((0..n).map(|i| unit(n, i)).collect())?,
        mixed_exponent: d2 / (4.0 * variance * (n - 1) as f64),
        separate_exponent: d2 / (4.0 * variance * n as f64),
    })
}

/// `(1/C(n,2)) Σ_{i<j} (a_i − a_j)²`.
pub fn uniform_pair_objective(a: &[f64]) -> f64 {
    let n = a.len();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            sum += (a[i] - a[j]).powi(2);
        }
    }
    sum / (n * (n - 1) / 2) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Degrees {
    pub check: Option<usize>,
    pub variable: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DesignMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degrees: Option<Degrees>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tie: Option<bool>,
}

/// Serialized form of a measurement schedule, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignDocument {
    pub kind: String,
    pub n: usize,
    pub m: usize,
    pub matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub metadata: DesignMetadata,
}

impl DesignDocument {
    pub fn new(kind: impl Into<String>, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let m = matrix.len();
        let n = matrix.first().map_or(0, Vec::len);
        let doc = DesignDocument {
            kind: kind.into(),
            n,
            m,
            matrix,
            metadata: DesignMetadata::default(),
        };
        doc.validate()?;
        Ok(doc)
    }

    pub fn bipartite(design: &BipartiteDesign, seed: u64) -> Self {
        DesignDocument {
            kind: "bipartite".into(),
            n: design.n(),
            m: design.m(),
            matrix: design.matrix(),
            metadata: DesignMetadata {
                seed: Some(seed),
                degrees: Some(Degrees {
                    check: Some(design.check_degree()),
                    variable: design.column_degrees(),
                }),
                ..DesignMetadata::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.matrix.len() != self.m {
            return Err(Error::invalid(format!(
                "design declares m={} but has {} rows",
                self.m,
                self.matrix.len()
            )));
        }
        SensingStrategy::Schedule(self.matrix.clone()).validate(self.n)
    }

    pub fn to_strategy(&self) -> Result<SensingStrategy> {
        self.validate()?;
        Ok(SensingStrategy::Schedule(self.matrix.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chernoff::{chernoff, min_pairwise_exponent};
    use crate::model::{Gaussian, HypothesisSpace};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng as _};

    #[test]
    fn hamming_rows_verbatim() {
        let rows = hamming74_rows();
        assert_eq!(rows.len(), 3);
        let weights: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
        assert_eq!(weights, vec![4.0, 4.0, 4.0]);
        let cols: Vec<[u8; 3]> = (0..7)
            .map(|i| [rows[0][i] as u8, rows[1][i] as u8, rows[2][i] as u8])
            .collect();
        for (i, c) in cols.iter().enumerate() {
            assert_ne!(c, &[0, 0, 0]);
            assert!(!cols[..i].contains(c));
        }
        for v in 0..7 {
            for w in v + 1..7 {
                assert!(rows.iter().any(|r| r[v] != r[w]), "pair ({v},{w})");
            }
        }
    }

    #[test]
    fn bipartite_strict_degrees() {
        let d = sparse_bipartite(102, 68, 6, 7, false).unwrap();
        assert!(d.rows().iter().all(|r| r.len() == 6));
        assert_eq!(d.variable_degree(), Some(4));
        let d = sparse_bipartite(100, 150, 6, 3, false).unwrap();
        assert_eq!(d.variable_degree(), Some(9));
        assert_eq!(d, sparse_bipartite(100, 150, 6, 3, false).unwrap());
        assert_ne!(d, sparse_bipartite(100, 150, 6, 4, false).unwrap());
    }

    #[test]
    fn bipartite_divisibility_error() {
        match sparse_bipartite(102, 50, 6, 7, false) {
            Err(Error::Config(msg)) => assert!(msg.contains("6m/n"), "{msg}"),
            other => panic!("expected configuration error, got {other:?}"),
        }
        let d = sparse_bipartite(102, 50, 6, 7, true).unwrap();
        let deg = d.column_degrees();
        let (lo, hi) = (deg.iter().min().unwrap(), deg.iter().max().unwrap());
        assert!(hi - lo <= 1);
        assert_eq!(deg.iter().sum::<usize>(), 300);
    }

    #[test]
    fn bipartite_degree_one_is_permutation() {
        let d = sparse_bipartite(9, 9, 1, 11, false).unwrap();
        let mat = d.matrix();
        for i in 0..9 {
            assert_eq!(mat.iter().map(|r| r[i]).sum::<f64>(), 1.0);
            assert_eq!(mat[i].iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn bipartite_full_rows() {
        let d = sparse_bipartite(5, 3, 5, 1, false).unwrap();
        assert!(d.rows().iter().all(|r| r == &vec![0, 1, 2, 3, 4]));
    }

    proptest! {
        #[test]
        fn bipartite_rows_are_simple(n in 2usize..40, m in 1usize..40, d in 1usize..8, seed: u64) {
            prop_assume!(d <= n);
            let design = sparse_bipartite(n, m, d, seed, true).unwrap();
            for row in design.rows() {
                prop_assert_eq!(row.len(), d);
                prop_assert!(row.windows(2).all(|w| w[0] < w[1]));
            }
            let deg = design.column_degrees();
            let lo = *deg.iter().min().unwrap();
            let hi = *deg.iter().max().unwrap();
            prop_assert!(hi - lo <= 1);
        }
    }

    fn degrees(s: &SensingStrategy, n: usize) -> Vec<usize> {
        let SensingStrategy::Schedule(rows) = s else { panic!("schedule expected") };
        (0..n).map(|i| rows.iter().filter(|r| r[i] == 1.0).count()).collect()
    }

    #[test]
    fn separate_baseline_counts() {
        let s = separate_baseline(4, 8, 1).unwrap();
        assert_eq!(degrees(&s, 4), vec![2, 2, 2, 2]);
        let s = separate_baseline(4, 9, 1).unwrap();
        let mut d = degrees(&s, 4);
        d.sort_unstable();
        assert_eq!(d, vec![2, 2, 2, 3]);
        let s = separate_baseline(100, 150, 5).unwrap();
        let d = degrees(&s, 100);
        assert_eq!(d.iter().filter(|&&x| x == 2).count(), 50);
        assert_eq!(d.iter().filter(|&&x| x == 1).count(), 50);
        let s = separate_baseline(10, 3, 5).unwrap();
        assert_eq!(s.prefix(3).unwrap().len(), 3);
    }

    #[test]
    fn strategy_validation() {
        assert!(SensingStrategy::Schedule(vec![]).validate(2).is_err());
        assert!(SensingStrategy::Fixed(vec![0.0, 0.0]).validate(2).is_err());
        assert!(SensingStrategy::Fixed(vec![1.0]).validate(2).is_err());
        assert!(SensingStrategy::Fixed(vec![1.0, 0.0]).validate(2).is_ok());
        let s = SensingStrategy::Schedule(hamming74_rows());
        let mut rng = seed::Rng::seed_from_u64(0);
        assert_eq!(s.vector_at(4, &mut rng), hamming74_rows()[1].as_slice());
    }

    #[test]
    fn equal_cov_examples() {
        let mu1 = DVector::from_vec(vec![8.0, 0.0]);
        let mu2 = DVector::zeros(2);
        let r = optimal_vector_equal_cov(&mu1, &mu2, &DMatrix::identity(2, 2)).unwrap();
        assert!((r.exponent - 8.0).abs() < 1e-12);
        assert!(r.vector[1].abs() < 1e-12 && r.vector[0] > 0.0);
        let a = r.vector.as_slice();
        let p = Gaussian::new(8.0 * a[0], a[0] * a[0]).unwrap();
        let q = Gaussian::new(0.0, a[0] * a[0]).unwrap();
        assert!((chernoff(&p, &q).unwrap().value - r.exponent).abs() < 1e-9);

        let sigma = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.5, 4.0]));
        let mu1 = DVector::from_vec(vec![1.0, -1.0, 3.0]);
        let mu2 = DVector::from_vec(vec![0.0, 1.0, 1.0]);
        let r = optimal_vector_equal_cov(&mu1, &mu2, &sigma).unwrap();
        assert!(((&sigma * &r.vector) - (&mu1 - &mu2)).amax() < 1e-9);
        assert!((r.vector[1] + 4.0).abs() < 1e-12);

        assert!(matches!(
            optimal_vector_equal_cov(&mu2, &mu2, &sigma),
            Err(Error::Indistinguishable(_))
        ));
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            optimal_vector_equal_cov(&DVector::from_vec(vec![1.0, 0.0]), &DVector::zeros(2), &singular),
            Err(Error::Decomposition(_))
        ));
    }

    #[test]
    fn equal_cov_projection_matches_chernoff() {
        let sigma = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 1.5]);
        let mu1 = DVector::from_vec(vec![1.0, 2.0, -1.0]);
        let mu2 = DVector::from_vec(vec![-0.5, 0.0, 0.5]);
        let r = optimal_vector_equal_cov(&mu1, &mu2, &sigma).unwrap();
        let a = &r.vector;
        let var = (&sigma * a).dot(a);
        let p = Gaussian::new(a.dot(&mu1), var).unwrap();
        let q = Gaussian::new(a.dot(&mu2), var).unwrap();
        assert!((chernoff(&p, &q).unwrap().value - r.exponent).abs() < 1e-9);
    }

    #[test]
    fn equal_mean_diagonal_tie() {
        let s1 = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 100.0]));
        let s2 = DMatrix::from_diagonal(&DVector::from_vec(vec![100.0, 1.0, 1.0]));
        let r = optimal_vector_equal_mean(&s1, &s2).unwrap();
        assert!((r.ratio - 100.0).abs() < 1e-9);
        assert!(r.tie);
        let on_axis = |i: usize| (r.vector[i] - 1.0).abs() < 1e-9;
        assert!(on_axis(0) || on_axis(2), "{:?}", r.vector);
        assert!((r.exponent - variance_ratio_chernoff(100.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn equal_mean_identical_covariances() {
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let r = optimal_vector_equal_mean(&s, &s).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-12);
        assert!(r.exponent.abs() < 1e-9);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            optimal_vector_equal_mean(&bad, &s),
            Err(Error::Decomposition(_))
        ));
    }

    fn quotient(s1: &DMatrix<f64>, s2: &DMatrix<f64>, a: &DVector<f64>) -> f64 {
        let q1 = (s1 * a).dot(a);
        let q2 = (s2 * a).dot(a);
        (q1 / q2).max(q2 / q1)
    }

    #[test]
    fn equal_mean_beats_random_directions() {
        let s1 = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.5, 0.5, 1.0, 0.5, 0.5, 0.5, 100.0]);
        let s2 = DMatrix::from_row_slice(3, 3, &[100.0, 0.5, 0.5, 0.5, 1.0, 0.5, 0.5, 0.5, 1.0]);
        let r = optimal_vector_equal_mean(&s1, &s2).unwrap();
        let a = DVector::from_vec(r.vector.clone());
        assert!((a.norm() - 1.0).abs() < 1e-12);
        assert!((quotient(&s1, &s2, &a) - r.ratio).abs() < 1e-9 * r.ratio);
        let mut rng = seed::rng(17);
        for _ in 0..10_000 {
            let v = DVector::from_fn(3, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            assert!(quotient(&s1, &s2, &v) <= r.ratio * (1.0 + 1e-9));
        }
        // Exponent is invariant under a → −a and a → ca.
        for c in [-1.0, 3.5, -0.01] {
            let b = &a * c;
            let e = variance_ratio_chernoff(quotient(&s1, &s2, &b)).unwrap();
            assert!((e - r.exponent).abs() < 1e-12);
        }
    }

    #[test]
    fn permutation_design_exponents() {
        let d = permutation_design(7, 0.0, 8.0, 1.0).unwrap();
        assert!((d.mixed_exponent - 64.0 / 24.0).abs() < 1e-12);
        assert!((d.separate_exponent - 64.0 / 28.0).abs() < 1e-12);
        let d2 = permutation_design(2, 0.0, 1.0, 1.0).unwrap();
        assert!((d2.mixed_exponent / d2.separate_exponent - 2.0).abs() < 1e-12);
        assert!(permutation_design(1, 0.0, 1.0, 1.0).is_err());
        assert!(permutation_design(3, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn permutation_design_matches_brute_force() {
        for n in [2usize, 3, 5, 7] {
            let (mu1, mu2, var) = (0.5, -1.5, 2.0);
            let d = permutation_design(n, mu1, mu2, var).unwrap();
            let space = HypothesisSpace::new(
                n,
                1,
                Gaussian::new(mu1, var).unwrap(),
                Gaussian::new(mu2, var).unwrap(),
            )
            .unwrap();
            let mixed = min_pairwise_exponent(&d.ensemble, &space, false).unwrap();
            let sep = min_pairwise_exponent(&d.separate, &space, false).unwrap();
            assert!((mixed.value - d.mixed_exponent).abs() < 1e-9, "n={n}");
            assert!((mixed.max - d.mixed_exponent).abs() < 1e-9, "n={n}");
            assert!((sep.value - d.separate_exponent).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn pair_objective_examples() {
        for n in [2usize, 3, 5, 7] {
            let d = permutation_design(n, 0.0, 1.0, 1.0).unwrap();
            let direct = {
                let a = &d.a_star;
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            s += (a[i] - a[j]).powi(2);
                        }
                    }
                }
                s / 2.0 / (n * (n - 1) / 2) as f64
            };
            let obj = uniform_pair_objective(&d.a_star);
            assert!((obj - 2.0 / (n - 1) as f64).abs() < 1e-12);
            assert!((obj - direct).abs() < 1e-12);
            assert_eq!(uniform_pair_objective(&vec![0.3; n]), 0.0);
            let e1 = unit(n, 0);
            let expected = (n - 1) as f64 / (n * (n - 1) / 2) as f64;
            assert!((uniform_pair_objective(&e1) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn design_document_round_trip() {
        let d = sparse_bipartite(12, 8, 3, 5, false).unwrap();
        let doc = DesignDocument::bipartite(&d, 5);
        let json = serde_json::to_string(&doc).unwrap();
        let back: DesignDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_strategy().unwrap(), d.to_strategy());
        let mut bad = doc.clone();
        bad.m = 3;
        assert!(bad.validate().is_err());
    }
}
