//! Python bindings: system configuration, scenario construction, scheme
//! runs, Monte-Carlo aggregation, layout evaluation, and the built-in
//! self-test.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mafd::channel::{materialize, AntennaLayout};
use mafd::config::{ConfigDocument, SystemConfig};
use mafd::error::Error;
use mafd::objective;
use mafd::scenario;
use mafd::schemes::{run_scheme_detailed, SchemeId};

fn to_py_err(err: Error) -> PyErr {
    match err {
        Error::Solver(_) | Error::PenaltyScale { .. } => PyRuntimeError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// System configuration; starts from the desk or full-scale preset.
#[pyclass(name = "Config")]
#[derive(Clone)]
struct PyConfig {
    inner: SystemConfig,
}

#[pymethods]
impl PyConfig {
    /// Desk-scale preset: 4 antennas per side, 2 users of each kind.
    #[staticmethod]
    fn desk() -> Self {
        Self {
            inner: SystemConfig::desk(),
        }
    }

    /// Full-scale preset: 6 antennas per side, 4 users of each kind.
    #[staticmethod]
    fn table() -> Self {
        Self {
            inner: SystemConfig::table_defaults(),
        }
    }

    /// Parse a JSON configuration document (same format as the CLI).
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let doc: ConfigDocument =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self {
            inner: doc.resolve().map_err(to_py_err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn region_size(&self) -> f64 {
        self.inner.region_size
    }

    #[setter]
    fn set_region_size(&mut self, v: f64) {
        self.inner.region_size = v;
    }

    #[getter]
    fn num_tx(&self) -> usize {
        self.inner.num_tx
    }

    #[getter]
    fn num_rx(&self) -> usize {
        self.inner.num_rx
    }

    fn set_antennas(&mut self, n: usize) {
        self.inner.num_tx = n;
        self.inner.num_rx = n;
    }

    fn set_users(&mut self, k_u: usize, k_d: usize, k_e: usize) {
        self.inner.k_u = k_u;
        self.inner.k_d = k_d;
        self.inner.k_e = k_e;
    }

    /// Shrink the solver budgets (particles, swarm/transmit/outer
    /// iterations) for quick interactive runs.
    fn set_budgets(&mut self, particles: usize, swarm_iters: usize, sca_iters: usize, ao_iters: usize) {
        self.inner.swarm.num_particles = particles;
        self.inner.swarm.max_iters = swarm_iters;
        self.inner.sca.max_iters = sca_iters;
        self.inner.ao.max_iters = ao_iters;
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, v: u64) {
        self.inner.seed = v;
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(antennas={}x{}, users={}/{}/{}, region={}, seed={})",
            self.inner.num_tx,
            self.inner.num_rx,
            self.inner.k_u,
            self.inner.k_d,
            self.inner.k_e,
            self.inner.region_size,
            self.inner.seed
        )
    }
}

/// One terminal drop with its channel realization.
#[pyclass(name = "Scenario")]
#[derive(Clone)]
struct PyScenario {
    inner: scenario::Scenario,
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn build(config: &PyConfig, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: scenario::build(&config.inner, seed).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn ul_positions(&self) -> Vec<[f64; 2]> {
        self.inner.ul_positions.clone()
    }

    #[getter]
    fn dl_positions(&self) -> Vec<[f64; 2]> {
        self.inner.dl_positions.clone()
    }

    #[getter]
    fn eve_positions(&self) -> Vec<[f64; 2]> {
        self.inner.eve_positions.clone()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(seed={}, users={}/{}/{})",
            self.inner.seed,
            self.inner.ul_positions.len(),
            self.inner.dl_positions.len(),
            self.inner.eve_positions.len()
        )
    }
}

/// Outcome of one scheme on one scenario.
#[pyclass(name = "TrialResult")]
#[derive(Clone)]
struct PyTrialResult {
    #[pyo3(get)]
    scheme: String,
    #[pyo3(get)]
    seed: u64,
    #[pyo3(get)]
    ssr: f64,
    #[pyo3(get)]
    ul_secrecy: f64,
    #[pyo3(get)]
    dl_secrecy: f64,
    #[pyo3(get)]
    iterations: usize,
    #[pyo3(get)]
    wall_secs: f64,
    /// Rows of (side, user, rate, eve_rate, secrecy).
    #[pyo3(get)]
    breakdown: Vec<(String, usize, f64, f64, f64)>,
}

#[pymethods]
impl PyTrialResult {
    fn __repr__(&self) -> String {
        format!(
            "TrialResult(scheme='{}', ssr={:.4}, ul={:.4}, dl={:.4})",
            self.scheme, self.ssr, self.ul_secrecy, self.dl_secrecy
        )
    }
}

/// Runs one scheme ("proposed", "fpa", "as", "rp", "apo", "pso", "zf",
/// "noan" or "hd") on a scenario.
#[pyfunction]
fn run_scheme(config: &PyConfig, scenario: &PyScenario, scheme: &str) -> PyResult<PyTrialResult> {
    let id = SchemeId::parse(scheme).map_err(to_py_err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario::derive_seed(
        config.inner.seed,
        &[scenario.inner.seed, 1],
    ));
    let (trial, breakdown) =
        run_scheme_detailed(id, &scenario.inner, &config.inner, &mut rng).map_err(to_py_err)?;
    let mut rows = Vec::new();
    for (side, list) in [("ul", &breakdown.ul), ("dl", &breakdown.dl)] {
        for (k, u) in list.iter().enumerate() {
            rows.push((side.to_string(), k, u.rate, u.eve_rate, u.secrecy));
        }
    }
    Ok(PyTrialResult {
        scheme: trial.scheme.name().to_string(),
        seed: trial.seed,
        ssr: trial.ssr,
        ul_secrecy: trial.ul_secrecy,
        dl_secrecy: trial.dl_secrecy,
        iterations: trial.iterations,
        wall_secs: trial.wall_secs,
        breakdown: rows,
    })
}

/// Runs every scheme on `trials` seeded scenarios and returns per-scheme
/// aggregates as dictionaries.
#[pyfunction]
#[pyo3(signature = (config, schemes, trials, parallelism = 0))]
fn monte_carlo(
    py: Python<'_>,
    config: &PyConfig,
    schemes: Vec<String>,
    trials: usize,
    parallelism: usize,
) -> PyResult<Vec<Py<PyAny>>> {
    let ids = schemes
        .iter()
        .map(|s| SchemeId::parse(s))
        .collect::<mafd::Result<Vec<_>>>()
        .map_err(to_py_err)?;
    let stats =
        scenario::monte_carlo(&config.inner, &ids, trials, parallelism).map_err(to_py_err)?;
    stats
        .per_scheme
        .iter()
        .map(|s| {
            let dict = pyo3::types::PyDict::new(py);
            dict.set_item("scheme", s.scheme.name())?;
            dict.set_item("mean_ssr", s.mean_ssr)?;
            dict.set_item("std_ssr", s.std_ssr)?;
            dict.set_item("q10", s.q10)?;
            dict.set_item("q50", s.q50)?;
            dict.set_item("q90", s.q90)?;
            dict.set_item("mean_ul", s.mean_ul)?;
            dict.set_item("mean_dl", s.mean_dl)?;
            dict.set_item("n", s.n)?;
            dict.set_item("failures", s.failures)?;
            Ok(dict.into_any().unbind())
        })
        .collect()
}

/// Clamped sum of secrecy rates at explicit antenna positions, using the
/// matched initial transmit and receive solution at that layout.
#[pyfunction]
fn evaluate_layout(
    config: &PyConfig,
    scenario: &PyScenario,
    tx: Vec<[f64; 2]>,
    rx: Vec<[f64; 2]>,
) -> PyResult<f64> {
    let layout = AntennaLayout::new(tx, rx);
    let channels =
        materialize(&layout, &scenario.inner.gains, config.inner.wavelength).map_err(to_py_err)?;
    let solution = mafd::ao::initial_solution(&channels, &config.inner, true).map_err(to_py_err)?;
    let ctx = objective::build_context(&channels, &solution, &config.inner).map_err(to_py_err)?;
    Ok(objective::ssr(&ctx).total)
}

/// Runs the built-in property checks; returns (name, passed, detail) rows.
#[pyfunction]
#[pyo3(signature = (seed = 1))]
fn selftest(seed: u64) -> Vec<(String, bool, String)> {
    mafd::verify::selftest(seed)
        .into_iter()
        .map(|o| (o.name.to_string(), o.passed, o.detail))
        .collect()
}

#[pymodule]
fn mafd_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyTrialResult>()?;
    m.add_function(wrap_pyfunction!(run_scheme, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_layout, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    m.add("SCHEMES", SchemeId::ALL.map(|s| s.name()).to_vec())?;
    Ok(())
}
