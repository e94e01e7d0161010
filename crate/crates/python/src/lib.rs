//! Python bindings for `stockblend-core`.
//!
//! Instances and solutions are opaque handles; reports and fitness vectors
//! come back as plain dicts.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use stockblend_core::baseline::random_search_baseline;
use stockblend_core::de::DeConfig;
use stockblend_core::error::Error;
use stockblend_core::fitness;
use stockblend_core::generate::{generate_instance, Shape};
use stockblend_core::harness::{self, SolveMode, SolveOptions};
use stockblend_core::instance::{self as io};
use stockblend_core::model::{Grades, Material};
use stockblend_core::process::ProcessParams;
use stockblend_core::repair;

fn to_py_err(err: Error) -> PyErr {
    match err {
        Error::Io { .. } => PyOSError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// A blending problem: stockpiles, monthly hauls, parcels and bounds.
#[pyclass(name = "Instance", module = "stockblend", from_py_object)]
#[derive(Clone)]
struct PyInstance {
    inner: io::Instance,
}

#[pymethods]
impl PyInstance {
    /// Seeded synthetic instance. `parcels` and `stockpiles` follow the
    /// command-line broadcasting rules.
    #[staticmethod]
    #[pyo3(signature = (months, parcels, stockpiles, seed = 1))]
    fn generate(months: usize, parcels: Vec<usize>, stockpiles: Vec<usize>, seed: u64) -> PyResult<Self> {
        let shape = Shape::new(months, &parcels, &stockpiles).map_err(to_py_err)?;
        Ok(PyInstance {
            inner: generate_instance(&shape, seed),
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        io::load_instance(path).map(|inner| PyInstance { inner }).map_err(to_py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: io::Instance = from_json(text)?;
        inner.validate().map_err(to_py_err)?;
        Ok(PyInstance { inner })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        io::save_instance(&self.inner, path).map_err(to_py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.meta.name.clone()
    }

    #[getter]
    fn months(&self) -> usize {
        self.inner.months()
    }

    #[getter]
    fn stockpiles(&self) -> usize {
        self.inner.stockpile_count()
    }

    /// Parcel count of every month.
    #[getter]
    fn parcels(&self) -> Vec<usize> {
        self.inner.parcels.iter().map(Vec::len).collect()
    }

    /// Shape label such as `M1 P2 L13 {6,7}`.
    #[getter]
    fn shape(&self) -> String {
        Shape::from(&self.inner).to_string()
    }

    fn __repr__(&self) -> String {
        format!("Instance({:?}, {})", self.inner.meta.name, Shape::from(&self.inner))
    }
}

/// Fractions and durations for every parcel of every month.
#[pyclass(name = "Solution", module = "stockblend", from_py_object)]
#[derive(Clone)]
struct PySolution {
    inner: stockblend_core::model::Solution,
}

#[pymethods]
impl PySolution {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        io::load_solution(path).map(|inner| PySolution { inner }).map_err(to_py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PySolution {
            inner: from_json(text)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        io::save_solution(&self.inner, path).map_err(to_py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn fractions(&self, month: usize, parcel: usize) -> PyResult<Vec<f64>> {
        self.parcel(month, parcel).map(|p| p.fractions.clone())
    }

    fn duration(&self, month: usize, parcel: usize) -> PyResult<f64> {
        self.parcel(month, parcel).map(|p| p.duration)
    }

    fn __len__(&self) -> usize {
        self.inner.months.len()
    }
}

impl PySolution {
    fn parcel(&self, month: usize, parcel: usize) -> PyResult<&stockblend_core::model::ParcelPlan> {
        self.inner
            .months
            .get(month)
            .and_then(|m| m.parcels.get(parcel))
            .ok_or_else(|| PyValueError::new_err(format!("no parcel {parcel} in month {month}")))
    }
}

/// Optimizes a plan; returns `(solution, report)`.
#[pyfunction]
#[pyo3(signature = (instance, mode = "lex", np = 10, f = 1.2, cr = 0.5, evals = 100_000, seed = 1, warm_start = None))]
#[allow(clippy::too_many_arguments)]
fn solve<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    mode: &str,
    np: usize,
    f: f64,
    cr: f64,
    evals: usize,
    seed: u64,
    warm_start: Option<&PySolution>,
) -> PyResult<(PySolution, Bound<'py, PyAny>)> {
    let mode: SolveMode = mode.parse().map_err(PyValueError::new_err)?;
    let config = DeConfig {
        population: np,
        scale: f,
        crossover: cr,
        max_evaluations: evals,
        seed,
        ..DeConfig::default()
    };
    config.validate().map_err(to_py_err)?;
    let options = SolveOptions {
        mode,
        config,
        warm_start: warm_start.map(|w| w.inner.clone()),
    };
    let outcome = py
        .detach(|| harness::solve(&instance.inner, &options))
        .map_err(to_py_err)?;
    let report = to_dict(py, &outcome.report)?;
    Ok((PySolution { inner: outcome.solution }, report))
}

/// Fitness vector of a normalized solution, plus its feasibility.
#[pyfunction]
fn evaluate<'py>(py: Python<'py>, solution: &PySolution, instance: &PyInstance) -> PyResult<Bound<'py, PyAny>> {
    let evaluation = fitness::evaluate(&solution.inner, &instance.inner).map_err(to_py_err)?;
    let dict = to_dict(py, &evaluation.fitness)?;
    dict.set_item("feasible", evaluation.fitness.is_feasible())?;
    dict.set_item("cu_grade_spread", evaluation.cu_grade_spread())?;
    Ok(dict)
}

/// Clamps negatives to zero and scales to sum one; all-zero becomes uniform.
#[pyfunction]
fn normalize_fractions(raw: Vec<f64>) -> Vec<f64> {
    repair::normalize_fractions(&raw)
}

/// Duration putting the parcel's concentrate within one tonne of `target`.
/// `grades` maps material names (`Cu`, `Fe`, ...) to fractions; missing
/// materials are zero.
#[pyfunction]
#[pyo3(signature = (grades, target, available, process = None))]
fn repair_duration<'py>(
    py: Python<'py>,
    grades: &Bound<'py, PyDict>,
    target: f64,
    available: f64,
    process: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut mixed = Grades::ZERO;
    for (key, value) in grades.iter() {
        let key: String = key.extract()?;
        let material = Material::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| PyValueError::new_err(format!("unknown material `{key}`")))?;
        mixed[material] = value.extract()?;
    }
    let params: ProcessParams = match process {
        Some(text) => from_json(text)?,
        None => ProcessParams::default(),
    };
    let result = repair::repair_duration(&mixed, target, available, &params).map_err(to_py_err)?;
    let dict = PyDict::new(py);
    dict.set_item("duration", result.duration)?;
    dict.set_item("concentrate", result.concentrate)?;
    dict.set_item("iterations", result.iterations)?;
    dict.set_item("in_band", result.in_band)?;
    Ok(dict.into_any())
}

/// Best of `budget` repaired random plans; returns `(solution, fitness)`.
#[pyfunction]
#[pyo3(signature = (instance, budget, seed = 1))]
fn random_search<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    budget: usize,
    seed: u64,
) -> PyResult<(PySolution, Bound<'py, PyAny>)> {
    let run = py
        .detach(|| random_search_baseline(&instance.inner, budget, seed))
        .map_err(to_py_err)?;
    let fitness = to_dict(py, &run.fitness)?;
    Ok((PySolution { inner: run.best }, fitness))
}

#[pymodule]
fn stockblend(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_fractions, m)?)?;
    m.add_function(wrap_pyfunction!(repair_duration, m)?)?;
    m.add_function(wrap_pyfunction!(random_search, m)?)?;
    Ok(())
}
