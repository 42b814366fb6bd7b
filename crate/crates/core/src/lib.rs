//! Compressed hypothesis testing for anomaly detection with mixed linear
//! observations.
//!
//! `n` independent random variables contain `k` anomalies; each measurement is
//! a linear combination `y = aᵀx` of a fresh realization. The crate computes
//! Chernoff-type error exponents for sensing strategies, designs sensing
//! vectors, and provides detectors and a Monte Carlo harness.

pub mod chernoff;
pub mod design;
pub mod detect;
pub mod error;
pub mod fmt;
pub mod model;
pub mod numeric;
pub mod seed;
pub mod sim;

pub use chernoff::{
    chernoff, inner_conditional_chernoff, min_pairwise_exponent, outer_conditional_chernoff,
    sample_complexity, DivergenceResult, SensingEnsemble,
};
pub use design::{BipartiteDesign, DesignDocument, SensingStrategy};
pub use error::{Error, Result};
pub use model::{Gaussian, Hypothesis, HypothesisSpace, Observation, ObservationSet};
pub use sim::{error_curve, paired_compare, DetectorSpec, ErrorCurve, ScenarioConfig, StrategySpec};
