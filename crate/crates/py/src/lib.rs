use chtest_core as ch;
use ch::chernoff::DivergenceResult;
use ch::design::SensingStrategy;
use ch::detect::{Detector, MpParams};
use nalgebra::DMatrix;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: ch::Error) -> PyErr {
    if e.is_configuration() || matches!(e, ch::Error::DegenerateProjection(_)) {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

#[pyclass(name = "Gaussian", frozen)]
struct Gaussian(ch::Gaussian);

#[pymethods]
impl Gaussian {
    #[new]
    fn new(mean: f64, variance: f64) -> PyResult<Self> {
        ch::Gaussian::new(mean, variance).map(Gaussian).map_err(err)
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.0.mean
    }

    #[getter]
    fn variance(&self) -> f64 {
        self.0.variance
    }

    fn ln_pdf(&self, y: f64) -> f64 {
        self.0.ln_pdf(y)
    }

    fn pdf(&self, y: f64) -> f64 {
        self.0.pdf(y)
    }

    fn __repr__(&self) -> String {
        format!("Gaussian(mean={}, variance={})", self.0.mean, self.0.variance)
    }
}

#[pyclass(name = "SensingEnsemble", frozen)]
struct SensingEnsemble(ch::SensingEnsemble);

#[pymethods]
impl SensingEnsemble {
    /// Uniform weights when `probabilities` is omitted.
    #[new]
    #[pyo3(signature = (vectors, probabilities=None))]
    fn new(vectors: Vec<Vec<f64>>, probabilities: Option<Vec<f64>>) -> PyResult<Self> {
        match probabilities {
            Some(p) => ch::SensingEnsemble::new(vectors, p),
            None => ch::SensingEnsemble::uniform(vectors),
        }
        .map(SensingEnsemble)
        .map_err(err)
    }

    #[getter]
    fn vectors(&self) -> Vec<Vec<f64>> {
        self.0.vectors().to_vec()
    }

    #[getter]
    fn probabilities(&self) -> Vec<f64> {
        self.0.probabilities().to_vec()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(name = "HypothesisSpace", frozen)]
struct HypothesisSpace(ch::HypothesisSpace);

#[pymethods]
impl HypothesisSpace {
    #[new]
    fn new(n: usize, k: usize, normal: PyRef<'_, Gaussian>, abnormal: PyRef<'_, Gaussian>) -> PyResult<Self> {
        ch::HypothesisSpace::new(n, k, normal.0, abnormal.0)
            .map(HypothesisSpace)
            .map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k
    }

    /// All anomaly sets in lexicographic order.
    fn hypotheses(&self) -> PyResult<Vec<Vec<usize>>> {
        Ok(self
            .0
            .hypotheses()
            .map_err(err)?
            .into_iter()
            .map(|h| h.support().to_vec())
            .collect())
    }
}

fn hyp(support: Vec<usize>, n: usize) -> PyResult<ch::Hypothesis> {
    ch::Hypothesis::new(support, n).map_err(err)
}

fn divergence<'py>(py: Python<'py>, r: &DivergenceResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("value", r.value)?;
    d.set_item("bits", r.bits())?;
    d.set_item("lambda_star", r.lambda_star)?;
    let method = match r.method {
        ch::chernoff::Method::ClosedForm => "closed_form",
        ch::chernoff::Method::NumericIntegration => "numeric_integration",
    };
    d.set_item("method", method)?;
    Ok(d)
}

/// Chernoff information between two Gaussians, in nats.
#[pyfunction]
#[pyo3(signature = (p, q, numeric=false))]
fn chernoff<'py>(py: Python<'py>, p: PyRef<'_, Gaussian>, q: PyRef<'_, Gaussian>, numeric: bool) -> PyResult<Bound<'py, PyDict>> {
    let r = if numeric {
        ch::chernoff::chernoff_numeric(&p.0, &q.0)
    } else {
        ch::chernoff(&p.0, &q.0)
    }
    .map_err(err)?;
    divergence(py, &r)
}

#[pyfunction]
fn inner_conditional_chernoff<'py>(
    py: Python<'py>,
    ensemble: PyRef<'_, SensingEnsemble>,
    space: PyRef<'_, HypothesisSpace>,
    v: Vec<usize>,
    w: Vec<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let n = space.0.n;
    let r = ch::inner_conditional_chernoff(&ensemble.0, &space.0, &hyp(v, n)?, &hyp(w, n)?).map_err(err)?;
    divergence(py, &r)
}

#[pyfunction]
fn outer_conditional_chernoff<'py>(
    py: Python<'py>,
    ensemble: PyRef<'_, SensingEnsemble>,
    space: PyRef<'_, HypothesisSpace>,
    v: Vec<usize>,
    w: Vec<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let n = space.0.n;
    let r = ch::outer_conditional_chernoff(&ensemble.0, &space.0, &hyp(v, n)?, &hyp(w, n)?).map_err(err)?;
    divergence(py, &r)
}

/// Error exponent: the smallest pairwise OC over all hypothesis pairs.
#[pyfunction]
#[pyo3(signature = (ensemble, space, permutation_invariant=false))]
fn min_pairwise_exponent<'py>(
    py: Python<'py>,
    ensemble: PyRef<'_, SensingEnsemble>,
    space: PyRef<'_, HypothesisSpace>,
    permutation_invariant: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let e = ch::min_pairwise_exponent(&ensemble.0, &space.0, permutation_invariant).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("value", e.value)?;
    d.set_item("lambda_star", e.lambda_star)?;
    d.set_item("argmin", (e.argmin.0.support().to_vec(), e.argmin.1.support().to_vec()))?;
    d.set_item("max", e.max)?;
    d.set_item("pairs_examined", e.pairs_examined)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (n, k, exponent, delta=ch::chernoff::DEFAULT_DELTA))]
fn sample_complexity(n: usize, k: usize, exponent: f64, delta: f64) -> PyResult<u64> {
    ch::sample_complexity(n, k, exponent, delta).map_err(err)
}

/// Best Chernoff information between zero-mean Gaussians whose variances
/// differ by the factor `ratio`.
#[pyfunction]
fn variance_ratio_chernoff(ratio: f64) -> PyResult<f64> {
    ch::chernoff::variance_ratio_chernoff(ratio).map_err(err)
}

/// Rows of a random 0/1 design; each row lists `degree` ones.
#[pyfunction]
#[pyo3(signature = (n, m, degree, seed, near_regular=false))]
fn sparse_bipartite(n: usize, m: usize, degree: usize, seed: u64, near_regular: bool) -> PyResult<Vec<Vec<f64>>> {
    Ok(ch::design::sparse_bipartite(n, m, degree, seed, near_regular)
        .map_err(err)?
        .matrix())
}

#[pyfunction]
fn hamming74_rows() -> Vec<Vec<f64>> {
    ch::design::hamming74_rows()
}

fn square(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("expected a non-empty square matrix"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

#[pyfunction]
fn optimal_vector_equal_mean<'py>(py: Python<'py>, sigma1: Vec<Vec<f64>>, sigma2: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
    let o = ch::design::optimal_vector_equal_mean(&square(&sigma1)?, &square(&sigma2)?).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("vector", o.vector)?;
    d.set_item("ratio", o.ratio)?;
    d.set_item("exponent", o.exponent)?;
    d.set_item("alpha", o.alpha)?;
    d.set_item("tie", o.tie)?;
    Ok(d)
}

#[pyfunction]
fn permutation_design<'py>(py: Python<'py>, n: usize, mu1: f64, mu2: f64, variance: f64) -> PyResult<Bound<'py, PyDict>> {
    let p = ch::design::permutation_design(n, mu1, mu2, variance).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("a_star", p.a_star)?;
    d.set_item("ensemble", Py::new(py, SensingEnsemble(p.ensemble))?)?;
    d.set_item("separate", Py::new(py, SensingEnsemble(p.separate))?)?;
    d.set_item("mixed_exponent", p.mixed_exponent)?;
    d.set_item("separate_exponent", p.separate_exponent)?;
    Ok(d)
}

/// Measurements of one realization per row of `vectors`, cycling through the
/// rows when `m` exceeds their number.
#[pyfunction]
#[pyo3(signature = (space, truth, vectors, seed, m=None))]
fn sample_trial(
    space: PyRef<'_, HypothesisSpace>,
    truth: Vec<usize>,
    vectors: Vec<Vec<f64>>,
    seed: u64,
    m: Option<usize>,
) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let m = m.unwrap_or(vectors.len());
    let h = hyp(truth, space.0.n)?;
    let obs = ch::model::sample_trial(&space.0, &h, &SensingStrategy::Schedule(vectors), m, seed).map_err(err)?;
    Ok((obs.records().iter().map(|r| r.vector.clone()).collect(), obs.values()))
}

/// Runs `method` (`lrt`, `pairwise`, `mp` or `lasso`) on the measurements.
#[pyfunction]
#[pyo3(signature = (space, vectors, values, method="lrt", threshold=0.0, lasso_lambda=None, max_iters=200, damping=0.5))]
#[allow(clippy::too_many_arguments)]
fn detect<'py>(
    py: Python<'py>,
    space: PyRef<'_, HypothesisSpace>,
    vectors: Vec<Vec<f64>>,
    values: Vec<f64>,
    method: &str,
    threshold: f64,
    lasso_lambda: Option<f64>,
    max_iters: usize,
    damping: f64,
) -> PyResult<Bound<'py, PyDict>> {
    if vectors.len() != values.len() {
        return Err(PyValueError::new_err("vectors and values differ in length"));
    }
    let records = vectors
        .into_iter()
        .zip(values)
        .map(|(vector, value)| ch::Observation { vector, value })
        .collect();
    let obs = ch::ObservationSet::new(records).map_err(err)?;
    let detector = match method {
        "lrt" => Detector::Lrt,
        "pairwise" => Detector::Pairwise { threshold },
        "mp" => Detector::Mp(MpParams { max_iters, damping }),
        "lasso" => Detector::Lasso { lambda: lasso_lambda },
        other => return Err(PyValueError::new_err(format!("unknown method '{other}'"))),
    };
    let r = detector.run(&space.0, &obs).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("support", r.support.as_ref().map(|h| h.support().to_vec()))?;
    d.set_item("scores", r.scores)?;
    d.set_item("tied", r.tied)?;
    d.set_item("converged", r.converged)?;
    d.set_item("iterations", r.iterations)?;
    Ok(d)
}

/// Error curve CSV for a scenario given as JSON text.
#[pyfunction]
fn simulate(py: Python<'_>, config_json: &str) -> PyResult<String> {
    let config = ch::ScenarioConfig::from_json(config_json).map_err(err)?;
    let curve = py.detach(|| ch::error_curve(&config)).map_err(err)?;
    Ok(curve.to_csv())
}

#[pymodule]
fn chtest(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Gaussian>()?;
    m.add_class::<SensingEnsemble>()?;
    m.add_class::<HypothesisSpace>()?;
    m.add_function(wrap_pyfunction!(chernoff, m)?)?;
    m.add_function(wrap_pyfunction!(inner_conditional_chernoff, m)?)?;
    m.add_function(wrap_pyfunction!(outer_conditional_chernoff, m)?)?;
    m.add_function(wrap_pyfunction!(min_pairwise_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(sample_complexity, m)?)?;
    m.add_function(wrap_pyfunction!(variance_ratio_chernoff, m)?)?;
    m.add_function(wrap_pyfunction!(sparse_bipartite, m)?)?;
    m.add_function(wrap_pyfunction!(hamming74_rows, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_vector_equal_mean, m)?)?;
    m.add_function(wrap_pyfunction!(permutation_design, m)?)?;
    m.add_function(wrap_pyfunction!(sample_trial, m)?)?;
    m.add_function(wrap_pyfunction!(detect, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
