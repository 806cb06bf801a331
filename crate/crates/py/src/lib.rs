//! Python bindings: language tables, metrics, baselines, single agents and
//! whole simulations. Randomized calls take an explicit integer seed.

use ilm_core::bitlang;
use ilm_core::ilm::{self as sim, AutoPer};
use ilm_core::metrics::{self, Baselines as CoreBaselines};
use ilm_core::{IlmError, Loss};
use pyo3::exceptions::{PyFloatingPointError, PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn py_err(e: IlmError) -> PyErr {
    match e {
        IlmError::NonFiniteLoss => PyFloatingPointError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Meaning-to-signal map over all 2^n1 meanings.
#[pyclass(name = "LanguageTable", module = "ilm", frozen)]
#[derive(Clone)]
struct PyLanguageTable(bitlang::LanguageTable);

#[pymethods]
impl PyLanguageTable {
    #[new]
    fn new(n1: usize, n3: usize, entries: Vec<u32>) -> PyResult<Self> {
        bitlang::LanguageTable::from_entries(n1, n3, entries)
            .map(Self)
            .map_err(py_err)
    }

    #[staticmethod]
    fn identity(n: usize) -> PyResult<Self> {
        bitlang::identity_language(n).map(Self).map_err(py_err)
    }

    /// Uniformly random map, as used for the background values.
    #[staticmethod]
    fn random(n1: usize, n3: usize, seed: u64) -> PyResult<Self> {
        metrics::random_table(n1, n3, &mut rng(seed)).map(Self).map_err(py_err)
    }

    /// Random bit-permutation language with flips and filler bits.
    #[staticmethod]
    fn compositional(n1: usize, n3: usize, seed: u64) -> PyResult<Self> {
        bitlang::random_compositional_language(n1, n3, &mut rng(seed))
            .map(|cl| Self(cl.expand()))
            .map_err(py_err)
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        bitlang::LanguageTable::from_text(text).map(Self).map_err(py_err)
    }

    #[getter]
    fn n1(&self) -> usize {
        self.0.n1()
    }

    #[getter]
    fn n3(&self) -> usize {
        self.0.n3()
    }

    #[getter]
    fn entries(&self) -> Vec<u32> {
        self.0.entries().to_vec()
    }

    fn get(&self, meaning: u32) -> PyResult<u32> {
        if (meaning as usize) < self.0.len() {
            Ok(self.0.get(meaning))
        } else {
            Err(PyValueError::new_err(format!("meaning {meaning} out of range")))
        }
    }

    fn checksum(&self) -> u64 {
        self.0.checksum()
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    fn expressivity(&self) -> f64 {
        metrics::expressivity_raw(&self.0)
    }

    fn compositionality(&self) -> f64 {
        metrics::compositionality_raw(&self.0)
    }

    /// Fraction of meanings mapped to the same signal.
    fn similarity(&self, other: &PyLanguageTable) -> PyResult<f64> {
        bitlang::table_similarity_raw(&self.0, &other.0).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __eq__(&self, other: &PyLanguageTable) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("LanguageTable(n1={}, n3={}, checksum={:016x})", self.0.n1(), self.0.n3(), self.0.checksum())
    }
}

/// Takes each meaning's signal from `a` with probability `p`, else from `b`.
#[pyfunction]
fn mix_languages(a: &PyLanguageTable, b: &PyLanguageTable, p: f64, seed: u64) -> PyResult<PyLanguageTable> {
    bitlang::mix_languages(&a.0, &b.0, p, &mut rng(seed))
        .map(PyLanguageTable)
        .map_err(py_err)
}

#[pyfunction]
fn normalize(raw: f64, baseline: f64) -> PyResult<f64> {
    metrics::normalize(raw, baseline).map_err(py_err)
}

/// Background values f0, x0 and c0 for one table shape.
#[pyclass(name = "Baselines", module = "ilm", frozen)]
#[derive(Clone)]
struct PyBaselines(CoreBaselines);

#[pymethods]
impl PyBaselines {
    #[staticmethod]
    #[pyo3(signature = (n1, n3, samples = 1000, seed = 2024))]
    fn estimate(n1: usize, n3: usize, samples: usize, seed: u64) -> PyResult<Self> {
        CoreBaselines::estimate(n1, n3, samples, seed).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn analytic(n1: usize, n3: usize, c0: f64) -> Self {
        Self(CoreBaselines::analytic(n1, n3, c0))
    }

    #[getter]
    fn f0(&self) -> f64 {
        self.0.f0.value
    }

    #[getter]
    fn x0(&self) -> f64 {
        self.0.x0.value
    }

    #[getter]
    fn c0(&self) -> f64 {
        self.0.c0.value
    }

    /// Analytic values agree with their Monte Carlo estimates.
    fn consistent(&self) -> bool {
        self.0.entries().iter().all(|(_, e)| e.consistent())
    }

    fn __repr__(&self) -> String {
        format!(
            "Baselines(n1={}, n3={}, f0={}, x0={}, c0={})",
            self.0.n1, self.0.n3, self.0.f0.value, self.0.x0.value, self.0.c0.value
        )
    }
}

/// Simulation parameters. `SimConfig("large", p=0.75)` starts from a preset
/// and overrides fields by keyword.
#[pyclass(name = "SimConfig", module = "ilm")]
#[derive(Clone)]
struct PySimConfig(sim::SimConfig);

impl PySimConfig {
    fn set(&mut self, key: &str, value: &Bound<'_, PyAny>) -> PyResult<()> {
        let c = &mut self.0;
        match key {
            "n1" => c.n1 = value.extract()?,
            "n2" => c.n2 = value.extract()?,
            "n3" => c.n3 = value.extract()?,
            "bottleneck_size" => c.bottleneck_size = value.extract()?,
            "auto_pool_size" => c.auto_pool_size = value.extract()?,
            "r" => c.r = value.extract()?,
            "epochs" => c.epochs = value.extract()?,
            "learning_rate" => c.learning_rate = value.extract()?,
            "threshold" => c.threshold = value.extract()?,
            "generations" => c.generations = value.extract()?,
            "p" => c.p = value.extract()?,
            "seed" => c.seed = value.extract()?,
            "baseline_samples" => c.baseline_samples = value.extract()?,
            "baseline_seed" => c.baseline_seed = value.extract()?,
            "loss" => {
                let s: String = value.extract()?;
                c.loss = Loss::parse(&s).ok_or_else(|| PyValueError::new_err(format!("unknown loss {s:?}")))?;
            }
            "auto_per" => {
                let s: String = value.extract()?;
                c.auto_per =
                    AutoPer::parse(&s).ok_or_else(|| PyValueError::new_err(format!("unknown auto_per {s:?}")))?;
            }
            _ => return Err(PyKeyError::new_err(key.to_string())),
        }
        Ok(())
    }
}

#[pymethods]
impl PySimConfig {
    #[new]
    #[pyo3(signature = (preset = "small", **overrides))]
    fn new(preset: &str, overrides: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let base = sim::SimConfig::preset(preset)
            .ok_or_else(|| PyValueError::new_err(format!("unknown preset {preset:?}")))?;
        let mut config = Self(base);
        if let Some(overrides) = overrides {
            for (k, v) in overrides.iter() {
                config.set(&k.extract::<String>()?, &v)?;
            }
        }
        config.0.validate().map_err(py_err)?;
        Ok(config)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let c = &self.0;
        let d = PyDict::new_bound(py);
        d.set_item("n1", c.n1)?;
        d.set_item("n2", c.n2)?;
        d.set_item("n3", c.n3)?;
        d.set_item("bottleneck_size", c.bottleneck_size)?;
        d.set_item("auto_pool_size", c.auto_pool_size)?;
        d.set_item("r", c.r)?;
        d.set_item("epochs", c.epochs)?;
        d.set_item("learning_rate", c.learning_rate)?;
        d.set_item("threshold", c.threshold)?;
        d.set_item("loss", c.loss.name())?;
        d.set_item("auto_per", c.auto_per.name())?;
        d.set_item("generations", c.generations)?;
        d.set_item("p", c.p)?;
        d.set_item("seed", c.seed)?;
        d.set_item("baseline_samples", c.baseline_samples)?;
        d.set_item("baseline_seed", c.baseline_seed)?;
        Ok(d)
    }

    fn baselines(&self) -> PyResult<PyBaselines> {
        let c = &self.0;
        PyBaselines::estimate(c.n1, c.n3, c.baseline_samples, c.baseline_seed)
    }

    fn __repr__(&self) -> String {
        format!("SimConfig({}, p={}, seed={})", self.0.architecture(), self.0.p, self.0.seed)
    }
}

/// Encoder/decoder pair.
#[pyclass(name = "Agent", module = "ilm")]
struct PyAgent(ilm_core::Agent);

#[pymethods]
impl PyAgent {
    #[new]
    fn new(n1: usize, n2: usize, n3: usize, seed: u64) -> PyResult<Self> {
        ilm_core::Agent::new(n1, n2, n3, &mut rng(seed)).map(Self).map_err(py_err)
    }

    /// Trains a fresh pupil on `tutor` with the config's schedule.
    #[staticmethod]
    fn train(tutor: &PyLanguageTable, config: &PySimConfig, seed: u64) -> PyResult<Self> {
        sim::train_pupil(&tutor.0, &config.0, &mut rng(seed))
            .map(|(agent, _)| Self(agent))
            .map_err(py_err)
    }

    /// The binarized language the encoder speaks.
    #[pyo3(signature = (threshold = 0.5))]
    fn language(&self, threshold: f64) -> PyLanguageTable {
        PyLanguageTable(sim::extract_language(&self.0, threshold))
    }

    /// Meaning bits through encoder then decoder, without binarizing.
    fn autoencode(&self, meaning: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.autoencode(&meaning).map_err(py_err)
    }
}

fn result_dict<'py>(py: Python<'py>, r: &sim::BatchResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new_bound(py);
    d.set_item("p", r.p)?;
    d.set_item("run", r.run)?;
    d.set_item("sub_seed", r.sub_seed)?;
    d.set_item("parent_a", r.trajectory.parent_a)?;
    d.set_item("parent_b", r.trajectory.parent_b)?;
    let records = PyList::empty_bound(py);
    for g in &r.trajectory.records {
        let m = &g.metrics;
        let row = PyDict::new_bound(py);
        row.set_item("generation", g.generation)?;
        row.set_item("x", m.x)?;
        row.set_item("c", m.c)?;
        row.set_item("s", m.s)?;
        row.set_item("a", m.a)?;
        row.set_item("b", m.b)?;
        row.set_item("x_raw", m.raw.x)?;
        row.set_item("c_raw", m.raw.c)?;
        row.set_item("s_raw", m.raw.s)?;
        row.set_item("a_raw", m.raw.a)?;
        row.set_item("b_raw", m.raw.b)?;
        records.append(row)?;
    }
    d.set_item("records", records)?;
    Ok(d)
}

fn baselines_or_default(config: &PySimConfig, baselines: Option<&PyBaselines>) -> PyResult<CoreBaselines> {
    match baselines {
        Some(b) => Ok(b.0),
        None => config.baselines().map(|b| b.0),
    }
}

/// One `(p, run)` cell; identical to the same cell of `run_batch`.
#[pyfunction]
#[pyo3(signature = (config, p, run = 0, baselines = None))]
fn run_single<'py>(
    py: Python<'py>,
    config: &PySimConfig,
    p: f64,
    run: usize,
    baselines: Option<&PyBaselines>,
) -> PyResult<Bound<'py, PyDict>> {
    let b = baselines_or_default(config, baselines)?;
    let c = config.0.clone();
    let r = py
        .allow_threads(|| sim::run_single(&c, p, run, c.seed, &b))
        .map_err(py_err)?;
    result_dict(py, &r)
}

/// Every `(p, run)` cell in order. `jobs = 0` uses all cores.
#[pyfunction]
#[pyo3(signature = (config, ps, runs, jobs = 0, baselines = None))]
fn run_batch<'py>(
    py: Python<'py>,
    config: &PySimConfig,
    ps: Vec<f64>,
    runs: usize,
    jobs: usize,
    baselines: Option<&PyBaselines>,
) -> PyResult<Bound<'py, PyList>> {
    let b = baselines_or_default(config, baselines)?;
    let c = config.0.clone();
    let results = py
        .allow_threads(|| sim::run_batch(&c, &ps, runs, c.seed, &b, jobs))
        .map_err(py_err)?;
    let out = PyList::empty_bound(py);
    for r in &results {
        out.append(result_dict(py, r)?)?;
    }
    Ok(out)
}

#[pymodule]
fn ilm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLanguageTable>()?;
    m.add_class::<PyBaselines>()?;
    m.add_class::<PySimConfig>()?;
    m.add_class::<PyAgent>()?;
    m.add_function(wrap_pyfunction!(mix_languages, m)?)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(run_single, m)?)?;
    m.add_function(wrap_pyfunction!(run_batch, m)?)?;
    Ok(())
}
