//! Seeded Monte Carlo estimation of error probability as a function of the
//! number of measurements.
//!
//! Every trial is keyed by `(m, trial_index)`: the true support, the sensing
//! realization and the variable realizations all derive from that key, so all
//! detectors in one configuration see identical trials and results do not
//! depend on thread scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chernoff::SensingEnsemble;
use crate::design::{
    hamming74_rows, permutation_design, separate_baseline, sparse_bipartite, SensingStrategy,
};
use crate::detect::{
    lasso_detect, lrt_full, mp_detect, pairwise_np_with_threshold, DetectionResult, MpParams,
};
use crate::error::{Error, Result};
use crate::fmt::num;
use crate::model::{binomial, sample_trial, Gaussian, Hypothesis, HypothesisSpace, ObservationSet, DEFAULT_HYPOTHESIS_CAP};
use crate::seed::{self, stream};

pub const MAX_TRIALS: usize = 10_000;
const WILSON_Z: f64 = 1.959_963_984_540_054;

/// How the mixed (compressed) measurements are generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategySpec {
    /// Random 0/1 design with `degree` variables per measurement.
    Bipartite {
        degree: usize,
        #[serde(default)]
        near_regular: bool,
        /// Use one design per `m` for all trials instead of resampling.
        #[serde(default)]
        pin_design: bool,
    },
    /// Round-robin over the (7,4) Hamming parity rows; requires `n = 7`.
    Hamming74,
    /// Independent uniform draws of `(e_i − e_j)/√2`.
    Permutation,
    /// Coordinate observations, as for the separate baseline.
    Separate,
    Fixed { vector: Vec<f64> },
    Schedule { vectors: Vec<Vec<f64>> },
    Random { ensemble: SensingEnsemble },
}

impl StrategySpec {
    fn is_binary(&self) -> bool {
        let binary = |v: &[f64]| v.iter().all(|&x| x == 0.0 || x == 1.0);
        match self {
            StrategySpec::Bipartite { .. } | StrategySpec::Hamming74 | StrategySpec::Separate => true,
            StrategySpec::Permutation => false,
            StrategySpec::Fixed { vector } => binary(vector),
            StrategySpec::Schedule { vectors } => vectors.iter().all(|v| binary(v)),
            StrategySpec::Random { ensemble } => ensemble.vectors().iter().all(|v| binary(v)),
        }
    }

    /// The realization used for one trial.
    pub fn realize(&self, n: usize, m: usize, trial_seed: u64, base_seed: u64) -> Result<SensingStrategy> {
        match self {
            StrategySpec::Bipartite {
                degree,
                near_regular,
                pin_design,
            } => {
                let s = if *pin_design {
                    seed::derive(base_seed, &[stream::DESIGN, m as u64])
                } else {
                    seed::derive(trial_seed, &[stream::DESIGN])
                };
                Ok(sparse_bipartite(n, m, *degree, s, *near_regular)?.to_strategy())
            }
            StrategySpec::Hamming74 => Ok(SensingStrategy::Schedule(hamming74_rows())),
            StrategySpec::Permutation => Ok(SensingStrategy::Random(
                permutation_design(n, 0.0, 1.0, 1.0)?.ensemble,
            )),
            StrategySpec::Separate => {
                separate_baseline(n, m, seed::derive(trial_seed, &[stream::BASELINE]))
            }
            StrategySpec::Fixed { vector } => Ok(SensingStrategy::Fixed(vector.clone())),
            StrategySpec::Schedule { vectors } => Ok(SensingStrategy::Schedule(vectors.clone())),
            StrategySpec::Random { ensemble } => Ok(SensingStrategy::Random(ensemble.clone())),
        }
    }
}

/// A detector applied to either the mixed strategy or the separate baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorSpec {
    /// Likelihood ratio test on mixed observations.
    Clrt,
    /// Likelihood ratio test on separate observations.
    Slrt,
    PairwiseClrt,
    PairwiseSlrt,
    Mp,
    Lasso,
}

impl DetectorSpec {
    pub const ALL: [DetectorSpec; 6] = [
        DetectorSpec::Clrt,
        DetectorSpec::Slrt,
        DetectorSpec::PairwiseClrt,
        DetectorSpec::PairwiseSlrt,
        DetectorSpec::Mp,
        DetectorSpec::Lasso,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorSpec::Clrt => "clrt",
            DetectorSpec::Slrt => "slrt",
            DetectorSpec::PairwiseClrt => "pairwise-clrt",
            DetectorSpec::PairwiseSlrt => "pairwise-slrt",
            DetectorSpec::Mp => "mp",
            DetectorSpec::Lasso => "lasso",
        }
    }

    pub fn uses_separate(self) -> bool {
        matches!(self, DetectorSpec::Slrt | DetectorSpec::PairwiseSlrt)
    }

    fn enumerates(self) -> bool {
        !matches!(self, DetectorSpec::Mp | DetectorSpec::Lasso)
    }
}

impl std::fmt::Display for DetectorSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DetectorSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        DetectorSpec::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown detector '{s}'")))
    }
}

fn default_base_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    pub k: usize,
    /// Distribution of normal variables.
    pub f1: Gaussian,
    /// Distribution of anomalous variables.
    pub f2: Gaussian,
    pub strategy: StrategySpec,
    pub detectors: Vec<DetectorSpec>,
    pub m_values: Vec<usize>,
    pub trials: usize,
    #[serde(default = "default_base_seed")]
    pub base_seed: u64,
    /// Overrides the default LASSO penalty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lasso_lambda: Option<f64>,
    #[serde(default)]
    pub mp: MpParams,
    /// Log-threshold of the pairwise tournament.
    #[serde(default)]
    pub pairwise_threshold: f64,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ScenarioConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("invalid scenario: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn space(&self) -> Result<HypothesisSpace> {
        HypothesisSpace::new(self.n, self.k, self.f1, self.f2)
    }

    pub fn validate(&self) -> Result<()> {
        self.space()?;
        if self.trials == 0 || self.trials > MAX_TRIALS {
            return Err(Error::Config(format!(
                "trials must be in 1..={MAX_TRIALS}, got {}",
                self.trials
            )));
        }
        if self.m_values.is_empty() || self.m_values[0] == 0 {
            return Err(Error::Config("m_values must be non-empty and positive".into()));
        }
        if self.m_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("m_values must be strictly increasing".into()));
        }
        if self.detectors.is_empty() {
            return Err(Error::Config("at least one detector is required".into()));
        }
        for (i, d) in self.detectors.iter().enumerate() {
            if self.detectors[..i].contains(d) {
                return Err(Error::Config(format!("detector '{d}' listed twice")));
            }
            if d.enumerates() && binomial(self.n, self.k) > DEFAULT_HYPOTHESIS_CAP as f64 {
                return Err(Error::CombinatorialOverflow {
                    n: self.n,
                    k: self.k,
                    count: binomial(self.n, self.k),
                    cap: DEFAULT_HYPOTHESIS_CAP,
                });
            }
            match d {
                DetectorSpec::Lasso if self.f1.mean == self.f2.mean => {
                    return Err(Error::Config(
                        "lasso needs a mean difference between f1 and f2".into(),
                    ))
                }
                DetectorSpec::Mp if !self.strategy.is_binary() => {
                    return Err(Error::Config(
                        "mp needs a 0/1 sensing strategy".into(),
                    ))
                }
                _ => {}
            }
        }
        if let Some(l) = self.lasso_lambda {
            if !(l >= 0.0) {
                return Err(Error::Config(format!("lasso_lambda must be >= 0, got {l}")));
            }
        }
        if !(self.mp.damping > 0.0 && self.mp.damping <= 1.0) || self.mp.max_iters == 0 {
            return Err(Error::Config("mp damping must be in (0,1] and max_iters >= 1".into()));
        }
        match &self.strategy {
            StrategySpec::Bipartite {
                degree,
                near_regular,
                ..
            } => {
                for &m in &self.m_values {
                    if *degree == 0 || *degree > self.n {
                        return Err(Error::Config(format!(
                            "bipartite degree must be in 1..={}",
                            self.n
                        )));
                    }
                    if !near_regular && (degree * m) % self.n != 0 {
                        return Err(Error::Config(format!(
                            "variable degree {degree}m/n = {degree}*{m}/{} is not an integer; \
                             set near_regular or change m",
                            self.n
                        )));
                    }
                }
            }
            StrategySpec::Hamming74 if self.n != 7 => {
                return Err(Error::Config("hamming74 requires n = 7".into()));
            }
            StrategySpec::Permutation if self.n < 2 => {
                return Err(Error::Config("permutation requires n >= 2".into()));
            }
            StrategySpec::Fixed { vector } => {
                SensingStrategy::Fixed(vector.clone()).validate(self.n)?
            }
            StrategySpec::Schedule { vectors } => {
                SensingStrategy::Schedule(vectors.clone()).validate(self.n)?
            }
            StrategySpec::Random { ensemble } => {
                SensingStrategy::Random(ensemble.clone()).validate(self.n)?
            }
            _ => {}
        }
        Ok(())
    }

    pub fn trial_seed(&self, m: usize, trial_index: usize) -> u64 {
        seed::derive(self.base_seed, &[m as u64, trial_index as u64])
    }
}

/// The result of one detector on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub correct: bool,
    /// The tournament found no winner.
    pub failure: bool,
    /// The detector returned an error; the trial counts as incorrect.
    pub diagnostic: Option<String>,
    /// The error was a numeric breakdown rather than an iteration limit or
    /// an input the detector does not support.
    #[serde(default)]
    pub numeric: bool,
}

fn is_numeric(e: &Error) -> bool {
    !e.is_configuration() && !matches!(e, Error::IterationLimit { .. })
}

impl TrialOutcome {
    fn from_result(result: Result<DetectionResult>, truth: &Hypothesis) -> Self {
        match result {
            Ok(r) => TrialOutcome {
                correct: r.is_correct(truth),
                failure: r.is_failure(),
                diagnostic: None,
                numeric: false,
            },
            Err(e) => TrialOutcome {
                correct: false,
                failure: false,
                diagnostic: Some(e.to_string()),
                numeric: is_numeric(&e),
            },
        }
    }
}

/// One trial: the true support and the observations under both strategies.
struct Trial {
    truth: Hypothesis,
    mixed: Option<ObservationSet>,
    separate: Option<ObservationSet>,
}

fn draw_support(n: usize, k: usize, trial_seed: u64) -> Result<Hypothesis> {
    let mut rng = seed::rng(seed::derive(trial_seed, &[stream::SUPPORT]));
    Hypothesis::new(rand::seq::index::sample(&mut rng, n, k).into_vec(), n)
}

fn build_trial(config: &ScenarioConfig, space: &HypothesisSpace, m: usize, index: usize, detectors: &[DetectorSpec]) -> Result<Trial> {
    let ts = config.trial_seed(m, index);
    let truth = draw_support(config.n, config.k, ts)?;
    let mixed = if detectors.iter().any(|d| !d.uses_separate()) {
        let strategy = config.strategy.realize(config.n, m, ts, config.base_seed)?;
        Some(sample_trial(space, &truth, &strategy, m, ts)?)
    } else {
        None
    };
    let separate = if detectors.iter().any(|d| d.uses_separate()) {
        let strategy = StrategySpec::Separate.realize(config.n, m, ts, config.base_seed)?;
        Some(sample_trial(space, &truth, &strategy, m, ts)?)
    } else {
        None
    };
    Ok(Trial {
        truth,
        mixed,
        separate,
    })
}

fn detect(config: &ScenarioConfig, space: &HypothesisSpace, detector: DetectorSpec, obs: &ObservationSet) -> Result<DetectionResult> {
    match detector {
        DetectorSpec::Clrt | DetectorSpec::Slrt => lrt_full(space, obs),
        DetectorSpec::PairwiseClrt | DetectorSpec::PairwiseSlrt => {
            pairwise_np_with_threshold(space, obs, config.pairwise_threshold)
        }
        DetectorSpec::Mp => mp_detect(space, obs, &config.mp),
        DetectorSpec::Lasso => lasso_detect(space, obs, config.lasso_lambda),
    }
}

fn run_detectors(config: &ScenarioConfig, space: &HypothesisSpace, m: usize, index: usize, detectors: &[DetectorSpec]) -> Vec<TrialOutcome> {
    match build_trial(config, space, m, index, detectors) {
        Ok(trial) => detectors
            .iter()
            .map(|&d| {
                let obs = if d.uses_separate() { &trial.separate } else { &trial.mixed };
                let obs = obs.as_ref().expect("observations built for every requested strategy");
                TrialOutcome::from_result(detect(config, space, d, obs), &trial.truth)
            })
            .collect(),
        Err(e) => detectors
            .iter()
            .map(|_| TrialOutcome {
                correct: false,
                failure: false,
                diagnostic: Some(e.to_string()),
                numeric: is_numeric(&e),
            })
            .collect(),
    }
}

/// Runs `detector` on trial `trial_index` at `m` measurements.
pub fn run_trial(config: &ScenarioConfig, m: usize, detector: DetectorSpec, trial_index: usize) -> Result<TrialOutcome> {
    let space = config.space()?;
    Ok(run_detectors(config, &space, m, trial_index, &[detector]).remove(0))
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(errors: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let t = trials as f64;
    let p = errors as f64 / t;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / t;
    let centre = (p + z2 / (2.0 * t)) / denom;
    let half = WILSON_Z / denom * (p * (1.0 - p) / t + z2 / (4.0 * t * t)).sqrt();
    let lo = if errors == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if errors >= trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub m: usize,
    pub detector: DetectorSpec,
    pub trials: usize,
    pub errors: usize,
    pub error_prob: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Trials where the tournament found no winner (included in `errors`).
    #[serde(default)]
    pub failures: usize,
    /// Trials where the detector raised an error (included in `errors`).
    #[serde(default)]
    pub detector_errors: usize,
}

impl CurveRow {
    fn new(m: usize, detector: DetectorSpec, outcomes: &[&TrialOutcome]) -> Self {
        let trials = outcomes.len();
        let errors = outcomes.iter().filter(|o| !o.correct).count();
        let (ci_low, ci_high) = wilson_interval(errors, trials);
        CurveRow {
            m,
            detector,
            trials,
            errors,
            error_prob: errors as f64 / trials as f64,
            ci_low,
            ci_high,
            failures: outcomes.iter().filter(|o| o.failure).count(),
            detector_errors: outcomes.iter().filter(|o| o.diagnostic.is_some()).count(),
        }
    }
}

/// Coordinates of a trial that failed numerically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub m: usize,
    pub detector: DetectorSpec,
    pub trial: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub rows: Vec<CurveRow>,
    /// First diagnostic message per `(m, detector)` that raised errors.
    pub diagnostics: Vec<String>,
    pub numeric_failures: Vec<TrialFailure>,
}

pub const CSV_HEADER: &str = "m,detector,trials,errors,error_prob,ci_low,ci_high";

impl ErrorCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.m,
                r.detector,
                r.trials,
                r.errors,
                num(r.error_prob),
                num(r.ci_low),
                num(r.ci_high)
            ));
        }
        out
    }

    pub fn row(&self, m: usize, detector: DetectorSpec) -> Option<&CurveRow> {
        self.rows.iter().find(|r| r.m == m && r.detector == detector)
    }
}

/// All outcomes, indexed `[m][trial][detector]`.
fn all_outcomes(config: &ScenarioConfig, space: &HypothesisSpace) -> Vec<Vec<Vec<TrialOutcome>>> {
    config
        .m_values
        .iter()
        .map(|&m| {
            (0..config.trials)
                .into_par_iter()
                .map(|t| run_detectors(config, space, m, t, &config.detectors))
                .collect()
        })
        .collect()
}

/// Error probability with Wilson intervals for every `(m, detector)`.
pub fn error_curve(config: &ScenarioConfig) -> Result<ErrorCurve> {
    config.validate()?;
    let space = config.space()?;
    let outcomes = all_outcomes(config, &space);
    let mut rows = Vec::new();
    let mut diagnostics = Vec::new();
    let mut numeric_failures = Vec::new();
    for (mi, &m) in config.m_values.iter().enumerate() {
        for (di, &d) in config.detectors.iter().enumerate() {
            let column: Vec<&TrialOutcome> = outcomes[mi].iter().map(|t| &t[di]).collect();
            if let Some(msg) = column.iter().find_map(|o| o.diagnostic.as_deref()) {
                diagnostics.push(format!("m={m} detector={d}: {msg}"));
            }
            for (trial, o) in column.iter().enumerate() {
                if o.numeric {
                    numeric_failures.push(TrialFailure {
                        m,
                        detector: d,
                        trial,
                        message: o.diagnostic.clone().unwrap_or_default(),
                    });
                }
            }
            rows.push(CurveRow::new(m, d, &column));
        }
    }
    Ok(ErrorCurve {
        rows,
        diagnostics,
        numeric_failures,
    })
}

/// Sidecar metadata recorded next to a CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub package: String,
    pub version: String,
    pub csv_header: String,
    pub config: ScenarioConfig,
    pub rows: Vec<CurveRow>,
    pub diagnostics: Vec<String>,
}

impl Provenance {
    pub fn new(config: &ScenarioConfig, curve: &ErrorCurve) -> Self {
        Provenance {
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            csv_header: CSV_HEADER.into(),
            config: config.clone(),
            rows: curve.rows.clone(),
            diagnostics: curve.diagnostics.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRow {
    pub m: usize,
    pub both_correct: usize,
    pub only_a_correct: usize,
    pub only_b_correct: usize,
    pub both_wrong: usize,
    /// Two-sided sign test on the discordant trials.
    pub p_value: f64,
}

/// Two-sided exact sign test: probability under Binomial(d, ½) of a split at
/// least as uneven as `(a, b)`, with `d = a + b`.
pub fn sign_test(a: usize, b: usize) -> f64 {
    let d = a + b;
    if d == 0 {
        return 1.0;
    }
    let lo = a.min(b);
    // ln C(d, i) 2^{−d}, accumulated by the ratio C(d,i+1)/C(d,i).
    let mut ln_pmf = -(d as f64) * std::f64::consts::LN_2;
    let mut terms = Vec::with_capacity(lo + 1);
    for i in 0..=lo {
        terms.push(ln_pmf);
        ln_pmf += ((d - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tail = (max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()).exp();
    (2.0 * tail).min(1.0)
}

/// Per-`m` agreement table between two detectors on identical trials.
pub fn paired_compare(config: &ScenarioConfig, a: DetectorSpec, b: DetectorSpec) -> Result<Vec<PairedRow>> {
    let mut config = config.clone();
    config.detectors = if a == b { vec![a] } else { vec![a, b] };
    config.validate()?;
    let space = config.space()?;
    let outcomes = all_outcomes(&config, &space);
    let ib = if a == b { 0 } else { 1 };
    Ok(config
        .m_values
        .iter()
        .zip(&outcomes)
        .map(|(&m, trials)| {
            let mut row = PairedRow {
                m,
                both_correct: 0,
                only_a_correct: 0,
                only_b_correct: 0,
                both_wrong: 0,
                p_value: 1.0,
            };
            for t in trials {
                match (t[0].correct, t[ib].correct) {
                    (true, true) => row.both_correct += 1,
                    (true, false) => row.only_a_correct += 1,
                    (false, true) => row.only_b_correct += 1,
                    (false, false) => row.both_wrong += 1,
                }
            }
            row.p_value = sign_test(row.only_a_correct, row.only_b_correct);
            row
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(mean: f64, var: f64) -> Gaussian {
        Gaussian::new(mean, var).unwrap()
    }

    fn config(strategy: StrategySpec, detectors: Vec<DetectorSpec>, m_values: Vec<usize>, trials: usize) -> ScenarioConfig {
        ScenarioConfig {
            name: None,
            n: 12,
            k: 1,
            f1: g(0.0, 1.0),
            f2: g(4.0, 1.0),
            strategy,
            detectors,
            m_values,
            trials,
            base_seed: 3,
            lasso_lambda: None,
            mp: MpParams::default(),
            pairwise_threshold: 0.0,
        }
    }

    fn bipartite() -> StrategySpec {
        StrategySpec::Bipartite {
            degree: 3,
            near_regular: false,
            pin_design: false,
        }
    }

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(0, 10);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.277_532).abs() < 1e-5);
        let (lo, hi) = wilson_interval(5, 10);
        assert!((lo - 0.236_593).abs() < 1e-5 && (hi - 0.763_407).abs() < 1e-5);
        assert_eq!(wilson_interval(0, 1000).0, 0.0);
        assert_eq!(wilson_interval(1000, 1000).1, 1.0);
        for (e, t) in [(0, 1), (1, 1), (3, 17), (999, 1000)] {
            let (lo, hi) = wilson_interval(e, t);
            let p = e as f64 / t as f64;
            assert!(lo <= p && p <= hi);
        }
        let w1 = {
            let (lo, hi) = wilson_interval(100, 1000);
            hi - lo
        };
        let w2 = {
            let (lo, hi) = wilson_interval(200, 2000);
            hi - lo
        };
        assert!((1.3..=1.6).contains(&(w1 / w2)));
    }

    #[test]
    fn sign_test_examples() {
        assert_eq!(sign_test(0, 0), 1.0);
        assert_eq!(sign_test(3, 3), 1.0);
        assert!((sign_test(0, 5) - 2.0 / 32.0).abs() < 1e-15);
        assert!((sign_test(1, 9) - 22.0 / 1024.0).abs() < 1e-15);
        assert!(sign_test(0, 5000) < 1e-300 || sign_test(0, 5000) == 0.0);
    }

    #[test]
    fn infinite_snr_is_always_correct() {
        let mut c = config(StrategySpec::Separate, vec![DetectorSpec::Clrt, DetectorSpec::Slrt, DetectorSpec::Mp], vec![12, 24], 20);
        c.f1 = g(0.0, 1e-12);
        c.f2 = g(8.0, 1e-12);
        let curve = error_curve(&c).unwrap();
        for r in &curve.rows {
            assert_eq!(r.errors, 0, "{r:?}");
        }
    }

    #[test]
    fn chance_level_with_uninformative_vector() {
        // A single all-ones vector cannot localize a variance anomaly.
        let mut c = config(
            StrategySpec::Fixed { vector: vec![1.0; 12] },
            vec![DetectorSpec::Clrt],
            vec![1, 5],
            2000,
        );
        c.f2 = g(0.0, 9.0);
        let curve = error_curve(&c).unwrap();
        for r in &curve.rows {
            let expected: f64 = 1.0 - 1.0 / 12.0;
            let se = (expected * (1.0 - expected) / 2000.0).sqrt();
            assert!((r.error_prob - expected).abs() < 4.0 * se, "{r:?}");
        }
    }

    #[test]
    fn trials_are_deterministic_and_paired() {
        let c = config(bipartite(), vec![DetectorSpec::Clrt, DetectorSpec::Lasso], vec![8], 5);
        let a = run_trial(&c, 8, DetectorSpec::Clrt, 3).unwrap();
        assert_eq!(a, run_trial(&c, 8, DetectorSpec::Clrt, 3).unwrap());
        let one = config(StrategySpec::Separate, vec![DetectorSpec::Clrt], vec![4], 1);
        let curve = error_curve(&one).unwrap();
        assert!(matches!(curve.rows[0].error_prob, p if p == 0.0 || p == 1.0));
        let pairs = paired_compare(&c, DetectorSpec::Clrt, DetectorSpec::Clrt).unwrap();
        assert_eq!(pairs[0].only_a_correct + pairs[0].only_b_correct, 0);
        assert_eq!(pairs[0].p_value, 1.0);
    }

    #[test]
    fn csv_is_identical_across_thread_counts() {
        let c = config(bipartite(), vec![DetectorSpec::Clrt, DetectorSpec::Slrt, DetectorSpec::Mp, DetectorSpec::Lasso], vec![4, 8, 12], 40);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| error_curve(&c).unwrap().to_csv())
        };
        let one = run(1);
        assert!(one.starts_with(CSV_HEADER));
        assert_eq!(one.lines().count(), 1 + 12);
        assert_eq!(one, run(4));
    }

    #[test]
    fn validation_errors() {
        let mut c = config(bipartite(), vec![DetectorSpec::Clrt], vec![8, 8], 5);
        assert!(c.validate().is_err());
        c.m_values = vec![5];
        match c.validate() {
            Err(Error::Config(msg)) => assert!(msg.contains("3m/n"), "{msg}"),
            other => panic!("{other:?}"),
        }
        c.m_values = vec![4];
        c.trials = 0;
        assert!(c.validate().is_err());
        c.trials = 5;
        c.detectors = vec![DetectorSpec::Lasso];
        c.f2 = g(0.0, 4.0);
        assert!(c.validate().is_err());
        c.detectors = vec![DetectorSpec::Mp];
        c.strategy = StrategySpec::Permutation;
        assert!(c.validate().is_err());
        assert!("bogus".parse::<DetectorSpec>().is_err());
        assert_eq!("pairwise-slrt".parse::<DetectorSpec>().unwrap(), DetectorSpec::PairwiseSlrt);
    }

    #[test]
    fn config_json_round_trip() {
        let json = r#"{
            "n": 12, "k": 1,
            "f1": {"mean": 0, "variance": 1}, "f2": {"mean": 4, "variance": 1},
            "strategy": {"kind": "bipartite", "degree": 3},
            "detectors": ["clrt", "slrt", "pairwise-clrt"],
            "m_values": [4, 8], "trials": 10
        }"#;
        let c = ScenarioConfig::from_json(json).unwrap();
        assert_eq!(c.base_seed, 1);
        let back = ScenarioConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(ScenarioConfig::from_json(&json.replace("\"trials\"", "\"trails\"")).is_err());
    }
}
