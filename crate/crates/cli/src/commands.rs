use std::f64::consts::LN_2;

use chtest::chernoff::{
    chernoff_numeric, inner_conditional_chernoff, min_pairwise_exponent,
    outer_conditional_chernoff, sample_complexity, DivergenceResult, SensingEnsemble,
};
use chtest::design::{
    hamming74_rows, optimal_vector_equal_cov, optimal_vector_equal_mean, permutation_design,
    separate_baseline, sparse_bipartite, DesignDocument, DesignMetadata, SensingStrategy,
};
use chtest::detect::Detector;
use chtest::fmt::num;
use chtest::model::{binomial, enumerate_hypotheses, sample_trial, Observation};
use chtest::sim::{error_curve, paired_compare, ScenarioConfig, StrategySpec};
use chtest::{Gaussian, Hypothesis, HypothesisSpace, ObservationSet};
use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use crate::output::{emit, field, read_json, CliError, CliResult, Format, Provenance};
use crate::{ChernoffArgs, ChernoffMode, ComplexityArgs, DesignKind, DetectArgs, DetectorName, Global, SimulateArgs};

const DEFAULT_SEED: u64 = 1;
const MAX_PAIR_HYPOTHESES: f64 = 20_000.0;
const DELTAS: [f64; 3] = [0.1, 0.01, 0.001];

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn method_name(r: &DivergenceResult) -> String {
    serde_json::to_value(r.method)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn support_label(h: &Hypothesis) -> String {
    h.support().iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
}

fn gaussian_or_parts(g: Option<Gaussian>, mean: Option<f64>, var: Option<f64>, name: &str) -> CliResult<Gaussian> {
    match (g, mean, var) {
        (Some(g), _, _) => Ok(g),
        (None, Some(m), Some(v)) => Ok(Gaussian::new(m, v)?),
        _ => Err(config_err(format!(
            "give --{name} mean,variance or both --{name}-mean and --{name}-var"
        ))),
    }
}

fn check_pair_count(space: &HypothesisSpace) -> CliResult<()> {
    if binomial(space.n, space.k) > MAX_PAIR_HYPOTHESES {
        return Err(config_err(format!(
            "C({},{}) hypotheses is too many for a pairwise minimum; pass --v and --w",
            space.n, space.k
        )));
    }
    Ok(())
}

pub fn chernoff(global: &crate::Global, args: &[String], a: ChernoffArgs) -> CliResult<()> {
    let (result, v, w, config) = match a.mode {
        ChernoffMode::Pair => {
            let p = gaussian_or_parts(a.p, a.p_mean, a.p_var, "p")?;
            let q = gaussian_or_parts(a.q, a.q_mean, a.q_var, "q")?;
            let r = if a.numeric {
                chernoff_numeric(&p, &q)?
            } else {
                chtest::chernoff(&p, &q)?
            };
            (r, None, None, json!({ "mode": "pair", "p": p, "q": q }))
        }
        ChernoffMode::Ic | ChernoffMode::Oc => {
            let path = a.ensemble.as_ref().ok_or_else(|| config_err("--ensemble is required for ic/oc"))?;
            let ensemble: SensingEnsemble = read_json(path)?;
            let f1 = a.f1.ok_or_else(|| config_err("--f1 is required for ic/oc"))?;
            let f2 = a.f2.ok_or_else(|| config_err("--f2 is required for ic/oc"))?;
            let space = HypothesisSpace::new(ensemble.dim(), a.k, f1, f2)?;
            let inner = a.mode == ChernoffMode::Ic;
            let eval = |hv: &Hypothesis, hw: &Hypothesis| {
                if inner {
                    inner_conditional_chernoff(&ensemble, &space, hv, hw)
                } else {
                    outer_conditional_chernoff(&ensemble, &space, hv, hw)
                }
            };
            let (r, hv, hw) = match (&a.v, &a.w) {
                (Some(v), Some(w)) => {
                    let hv = Hypothesis::new(v.clone(), space.n)?;
                    let hw = Hypothesis::new(w.clone(), space.n)?;
                    (eval(&hv, &hw)?, hv, hw)
                }
                _ if !inner => {
                    check_pair_count(&space)?;
                    let e = min_pairwise_exponent(&ensemble, &space, false)?;
                    let r = outer_conditional_chernoff(&ensemble, &space, &e.argmin.0, &e.argmin.1)?;
                    (r, e.argmin.0, e.argmin.1)
                }
                _ => {
                    check_pair_count(&space)?;
                    let hyps = enumerate_hypotheses(space.n, space.k)?;
                    let mut best: Option<(DivergenceResult, usize, usize)> = None;
                    for i in 0..hyps.len() {
                        for j in i + 1..hyps.len() {
                            let r = eval(&hyps[i], &hyps[j])?;
                            if best.as_ref().is_none_or(|b| r.value < b.0.value) {
                                best = Some((r, i, j));
                            }
                        }
                    }
                    let (r, i, j) = best.ok_or_else(|| config_err("need at least two hypotheses"))?;
                    (r, hyps[i].clone(), hyps[j].clone())
                }
            };
            let config = json!({
                "mode": if inner { "ic" } else { "oc" },
                "ensemble": ensemble,
                "f1": f1,
                "f2": f2,
                "k": a.k,
            });
            (r, Some(hv), Some(hw), config)
        }
    };
    let mode = config["mode"].as_str().unwrap_or_default().to_string();
    let body = json!({
        "mode": mode,
        "nats": result.value,
        "bits": result.bits(),
        "lambda_star": result.lambda_star,
        "method": method_name(&result),
        "v": v.as_ref().map(Hypothesis::support),
        "w": w.as_ref().map(Hypothesis::support),
    });
    let csv = || {
        format!(
            "mode,nats,bits,lambda_star,method,v,w\n{},{},{},{},{},{},{}\n",
            mode,
            num(result.value),
            num(result.bits()),
            num(result.lambda_star),
            method_name(&result),
            v.as_ref().map(support_label).unwrap_or_default(),
            w.as_ref().map(support_label).unwrap_or_default(),
        )
    };
    emit(global, global.format.unwrap_or(Format::Csv), Provenance::new(args, None, config), body, csv)
}

fn read_matrix(path: &std::path::Path) -> CliResult<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = read_json(path)?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(config_err(format!("{}: expected a square matrix", path.display())));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn design(global: &Global, args: &[String], kind: DesignKind) -> CliResult<()> {
    let seed = global.seed.unwrap_or(DEFAULT_SEED);
    let (doc, seed_used, config) = match kind {
        DesignKind::Bipartite {
            n,
            m,
            degree,
            near_regular,
        } => {
            let d = sparse_bipartite(n, m, degree, seed, near_regular)?;
            let config = json!({ "kind": "bipartite", "n": n, "m": m, "degree": degree, "near_regular": near_regular });
            (DesignDocument::bipartite(&d, seed), Some(seed), config)
        }
        DesignKind::Hamming74 => (
            DesignDocument::new("hamming74", hamming74_rows())?,
            None,
            json!({ "kind": "hamming74" }),
        ),
        DesignKind::Separate { n, m } => {
            let rows = match separate_baseline(n, m, seed)? {
                SensingStrategy::Schedule(rows) => rows,
                other => other.prefix(m)?,
            };
            let mut doc = DesignDocument::new("separate", rows)?;
            doc.metadata.seed = Some(seed);
            (doc, Some(seed), json!({ "kind": "separate", "n": n, "m": m }))
        }
        DesignKind::Permutation { n, mu1, mu2, var } => {
            let p = permutation_design(n, mu1, mu2, var)?;
            let mut doc = DesignDocument::new("permutation", p.ensemble.vectors().to_vec())?;
            doc.metadata.exponent = Some(p.mixed_exponent);
            let config = json!({
                "kind": "permutation", "n": n, "mu1": mu1, "mu2": mu2, "var": var,
                "separate_exponent": p.separate_exponent,
            });
            (doc, None, config)
        }
        DesignKind::OptimalMean { sigma1, sigma2 } => {
            let (s1, s2) = (read_matrix(&sigma1)?, read_matrix(&sigma2)?);
            let opt = optimal_vector_equal_mean(&s1, &s2)?;
            let mut doc = DesignDocument::new("optimal_mean", vec![opt.vector.clone()])?;
            doc.metadata = DesignMetadata {
                exponent: Some(opt.exponent),
                ratio: Some(opt.ratio),
                tie: Some(opt.tie),
                ..DesignMetadata::default()
            };
            let config = json!({
                "kind": "optimal_mean",
                "sigma1": sigma1.display().to_string(),
                "sigma2": sigma2.display().to_string(),
            });
            (doc, None, config)
        }
        DesignKind::OptimalCov { mu1, mu2, sigma } => {
            let s = read_matrix(&sigma)?;
            let opt = optimal_vector_equal_cov(&DVector::from_vec(mu1.clone()), &DVector::from_vec(mu2.clone()), &s)?;
            let mut doc = DesignDocument::new("optimal_cov", vec![opt.vector.iter().copied().collect()])?;
            doc.metadata.exponent = Some(opt.exponent);
            let config = json!({ "kind": "optimal_cov", "mu1": mu1, "mu2": mu2, "sigma": sigma.display().to_string() });
            (doc, None, config)
        }
    };
    let body = serde_json::to_value(&doc).expect("design serializes");
    let csv = || {
        doc.matrix
            .iter()
            .map(|r| r.iter().map(|&x| num(x)).collect::<Vec<_>>().join(",") + "\n")
            .collect::<String>()
    };
    emit(global, global.format.unwrap_or(Format::Json), Provenance::new(args, seed_used, config), body, csv)
}

fn load_scenario(path: &std::path::Path) -> CliResult<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    Ok(ScenarioConfig::from_json(&text)?)
}

pub fn simulate(global: &Global, args: &[String], a: SimulateArgs) -> CliResult<()> {
    let mut config = load_scenario(&a.config)?;
    if let Some(seed) = global.seed {
        config.base_seed = seed;
    }
    let provenance = |config: &ScenarioConfig| {
        Provenance::new(args, Some(config.base_seed), serde_json::to_value(config).expect("config serializes"))
    };
    let format = global.format.unwrap_or(Format::Csv);
    eprintln!(
        "simulating {} trials at {} values of m",
        config.trials,
        config.m_values.len()
    );

    if let Some((da, db)) = a.compare {
        let rows = paired_compare(&config, da, db)?;
        let csv = || {
            let mut s = String::from("m,detector_a,detector_b,both_correct,only_a_correct,only_b_correct,both_wrong,p_value\n");
            for r in &rows {
                s.push_str(&format!(
                    "{},{da},{db},{},{},{},{},{}\n",
                    r.m,
                    r.both_correct,
                    r.only_a_correct,
                    r.only_b_correct,
                    r.both_wrong,
                    num(r.p_value)
                ));
            }
            s
        };
        let body = json!({ "detector_a": da, "detector_b": db, "rows": rows });
        emit(global, format, provenance(&config), body, csv)?;
        eprintln!("done");
        return Ok(());
    }

    let curve = error_curve(&config)?;
    for d in &curve.diagnostics {
        eprintln!("warning: {d}");
    }
    let body = serde_json::to_value(&curve).expect("curve serializes");
    emit(global, format, provenance(&config), body, || curve.to_csv())?;
    if let Some(first) = curve.numeric_failures.first() {
        return Err(CliError::Numeric(format!(
            "{} trial(s) failed numerically; first at m={} detector={} trial={}: {}",
            curve.numeric_failures.len(),
            first.m,
            first.detector,
            first.trial,
            first.message
        )));
    }
    eprintln!("done");
    Ok(())
}

pub fn detect(global: &Global, args: &[String], a: DetectArgs) -> CliResult<()> {
    let mut doc: Value = read_json(&a.design)?;
    if let Some(inner) = doc.get_mut("result").filter(|r| r.get("matrix").is_some()) {
        doc = inner.take();
    }
    let doc: DesignDocument = serde_json::from_value(doc)
        .map_err(|e| CliError::Config(format!("{}: {e}", a.design.display())))?;
    doc.validate()?;
    let space = HypothesisSpace::new(doc.n, a.k, a.f1, a.f2)?;
    let seed = global.seed.unwrap_or(DEFAULT_SEED);
    let (obs, truth, seed_used) = match (&a.values, &a.truth) {
        (Some(values), _) => {
            if values.len() != doc.m {
                return Err(config_err(format!(
                    "design has {} rows but {} values were given",
                    doc.m,
                    values.len()
                )));
            }
            let records = doc
                .matrix
                .iter()
                .zip(values)
                .map(|(row, &value)| Observation {
                    vector: row.clone(),
                    value,
                })
                .collect();
            (ObservationSet::new(records)?, None, None)
        }
        (None, Some(t)) => {
            let truth = Hypothesis::new(t.clone(), doc.n)?;
            space.check(&truth)?;
            let obs = sample_trial(&space, &truth, &doc.to_strategy()?, doc.m, seed)?;
            (obs, Some(truth), Some(seed))
        }
        (None, None) => return Err(config_err("give --values or --truth")),
    };
    let detector = match a.detector {
        DetectorName::Lrt => Detector::Lrt,
        DetectorName::Pairwise => Detector::Pairwise { threshold: a.threshold },
        DetectorName::Mp => Detector::Mp(Default::default()),
        DetectorName::Lasso => Detector::Lasso { lambda: a.lambda },
    };
    let r = detector.run(&space, &obs)?;
    let correct = truth.as_ref().map(|t| r.is_correct(t));
    let config = json!({
        "design": a.design.display().to_string(),
        "f1": a.f1, "f2": a.f2, "k": a.k,
        "detector": detector,
        "truth": truth.as_ref().map(Hypothesis::support),
    });
    let body = json!({
        "support": r.support.as_ref().map(Hypothesis::support),
        "correct": correct,
        "tied": r.tied,
        "converged": r.converged,
        "iterations": r.iterations,
        "scores": r.scores,
        "values": obs.values(),
    });
    let csv = || {
        format!(
            "detector,support,correct,tied,converged,iterations\n{},{},{},{},{},{}\n",
            r.method.name(),
            field(&r.support.as_ref().map(support_label).unwrap_or_else(|| "failure".into())),
            correct.map(|c| c.to_string()).unwrap_or_default(),
            r.tied,
            r.converged,
            r.iterations
        )
    };
    emit(global, global.format.unwrap_or(Format::Json), Provenance::new(args, seed_used, config), body, csv)
}

/// Error exponent implied by a scenario's sensing strategy.
fn scenario_exponent(c: &ScenarioConfig) -> CliResult<f64> {
    let space = c.space()?;
    let coords = || -> Vec<Vec<f64>> {
        (0..c.n)
            .map(|i| (0..c.n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect()
    };
    let (ensemble, symmetric) = match &c.strategy {
        StrategySpec::Permutation => {
            if c.f1.variance == c.f2.variance {
                return Ok(permutation_design(c.n, c.f1.mean, c.f2.mean, c.f1.variance)?.mixed_exponent);
            }
            (permutation_design(c.n, 0.0, 1.0, 1.0)?.ensemble, true)
        }
        StrategySpec::Separate => (SensingEnsemble::uniform(coords())?, true),
        StrategySpec::Hamming74 => (SensingEnsemble::uniform(hamming74_rows())?, false),
        StrategySpec::Fixed { vector } => (SensingEnsemble::single(vector.clone())?, false),
        StrategySpec::Schedule { vectors } => (SensingEnsemble::uniform(vectors.clone())?, false),
        StrategySpec::Random { ensemble } => (ensemble.clone(), false),
        StrategySpec::Bipartite { .. } => {
            return Err(config_err(
                "the exponent of a random bipartite design is not derived; pass --n, --k and --exponent",
            ))
        }
    };
    if !symmetric {
        check_pair_count(&space)?;
    }
    Ok(min_pairwise_exponent(&ensemble, &space, symmetric)?.value)
}

pub fn complexity(global: &Global, args: &[String], a: ComplexityArgs) -> CliResult<()> {
    let (n, k, exponent, config) = match &a.scenario {
        Some(path) => {
            let c = load_scenario(path)?;
            let e = scenario_exponent(&c)?;
            (c.n, c.k, e, serde_json::to_value(&c).expect("config serializes"))
        }
        None => {
            let (n, k, e) = (
                a.n.ok_or_else(|| config_err("--n is required"))?,
                a.k.ok_or_else(|| config_err("--k is required"))?,
                a.exponent.ok_or_else(|| config_err("--exponent is required"))?,
            );
            (n, k, e, json!({ "n": n, "k": k, "exponent": e }))
        }
    };
    let bounds = DELTAS
        .iter()
        .map(|&d| Ok((d, sample_complexity(n, k, exponent, d)?)))
        .collect::<CliResult<Vec<(f64, u64)>>>()?;
    let (shown, unit) = if global.bits {
        (exponent / LN_2, "bits")
    } else {
        (exponent, "nats")
    };
    let body = json!({
        "n": n,
        "k": k,
        "exponent_nats": exponent,
        "exponent_bits": exponent / LN_2,
        "bounds": bounds.iter().map(|(d, m)| json!({ "delta": d, "m": m })).collect::<Vec<Value>>(),
    });
    let csv = || {
        let mut s = String::from("n,k,exponent,unit,delta,m_bound\n");
        for (d, m) in &bounds {
            s.push_str(&format!("{n},{k},{},{unit},{},{m}\n", num(shown), num(*d)));
        }
        s
    };
    emit(global, global.format.unwrap_or(Format::Csv), Provenance::new(args, None, config), body, csv)
}
