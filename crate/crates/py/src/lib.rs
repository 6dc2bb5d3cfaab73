//! Python module `pyhemsim`: build scenarios, simulate them under either
//! controller and read back ledgers and metric reports.

use std::path::PathBuf;

use hemsim::ledger::{RunLedger, StepRecord};
use hemsim::metrics::{compare, MetricsReport};
use hemsim::optimizer::{HemController, OptimizerConfig};
use hemsim::scenario::{DataSet, Scenario, ScenarioConfig};
use hemsim::sim::{simulate, BaselineConfig, BaselineController};
use hemsim::HemError;
use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn err(e: HemError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn from_py<T: DeserializeOwned + Default>(obj: Option<&Bound<'_, PyDict>>) -> PyResult<T> {
    let Some(obj) = obj else { return Ok(T::default()) };
    let json = obj.py().import("json")?;
    let text: String = json.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A realized simulation scenario.
#[pyclass(name = "Scenario", module = "pyhemsim", frozen)]
pub struct PyScenario {
    inner: Scenario,
}

#[pymethods]
impl PyScenario {
    /// Keyword arguments override the scenario defaults, e.g. `Scenario(case=5, seed=2, days=3)`.
    #[new]
    #[pyo3(signature = (**overrides))]
    fn new(overrides: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let config: ScenarioConfig = from_py(overrides)?;
        config.validate().map_err(err)?;
        let data = DataSet::load().map_err(err)?;
        Ok(Self {
            inner: Scenario::build(&config, &data).map_err(err)?,
        })
    }

    #[getter]
    fn n_steps(&self) -> usize {
        self.inner.n_steps()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt()
    }

    #[getter]
    fn fingerprint(&self) -> &str {
        &self.inner.fingerprint
    }

    #[getter]
    fn house_area_ft2(&self) -> f64 {
        self.inner.house_area_ft2
    }

    #[getter]
    fn price(&self) -> Vec<f64> {
        self.inner.price.clone()
    }

    #[getter]
    fn ambient(&self) -> Vec<f64> {
        self.inner.ambient.clone()
    }

    #[getter]
    fn solar(&self) -> Vec<f64> {
        self.inner.solar.clone()
    }

    #[getter]
    fn non_deferrable(&self) -> Vec<f64> {
        self.inner.non_deferrable.clone()
    }

    /// Deferrable requests as dictionaries.
    fn requests<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.requests)
    }

    fn config<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.config)
    }

    fn __repr__(&self) -> String {
        let c = &self.inner.config;
        format!(
            "Scenario(case={}, seed={}, start_day={}, days={})",
            c.case, c.seed, c.start_day, c.days
        )
    }
}

/// Per-step time series and request events of one run.
#[pyclass(name = "Ledger", module = "pyhemsim", frozen)]
pub struct PyLedger {
    inner: RunLedger,
}

fn column(steps: &[StepRecord], name: &str) -> Option<Vec<f64>> {
    let f: fn(&StepRecord) -> f64 = match name {
        "time_s" => |s| s.time_s,
        "price" => |s| s.price,
        "ambient" => |s| s.ambient,
        "irradiance" => |s| s.irradiance,
        "solar_available" => |s| s.solar_available,
        "grid" => |s| s.grid,
        "solar_used" => |s| s.solar_used,
        "curtailed" => |s| s.curtailed,
        "storage" => |s| s.storage,
        "hvac" => |s| s.hvac,
        "xev" => |s| s.xev,
        "deferrable" => |s| s.deferrable,
        "non_deferrable" => |s| s.non_deferrable,
        "t_indoor" => |s| s.t_indoor,
        "t_set" => |s| s.t_set,
        "soc_es" => |s| s.soc_es,
        "soc_xev" => |s| s.soc_xev,
        "es_current" => |s| s.es_current,
        "u_hvac" => |s| s.u_hvac,
        "u_xev" => |s| f64::from(s.u_xev),
        "u_laundry" => |s| f64::from(s.u_laundry),
        "u_dishwasher" => |s| f64::from(s.u_dishwasher),
        "band_flag" => |s| f64::from(s.band_flag),
        "cap_flag" => |s| f64::from(s.cap_flag),
        "objective" => |s| s.objective,
        _ => return None,
    };
    Some(steps.iter().map(f).collect())
}

#[pymethods]
impl PyLedger {
    /// Reads a ledger directory written by `write` or by the `hemsim` runner.
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: RunLedger::read(&path).map_err(err)?,
        })
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write(&path).map_err(err)
    }

    #[getter]
    fn controller(&self) -> &str {
        &self.inner.meta.controller
    }

    #[getter]
    fn n_steps(&self) -> usize {
        self.inner.steps.len()
    }

    /// One step-record field as a list, e.g. `ledger.column("grid")`.
    fn column(&self, name: &str) -> PyResult<Vec<f64>> {
        column(&self.inner.steps, name).ok_or_else(|| PyKeyError::new_err(format!("no ledger column {name:?}")))
    }

    fn requests<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.requests)
    }

    fn meta<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.meta)
    }

    /// Metric report as a dictionary.
    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &MetricsReport::from_ledger(&self.inner).map_err(err)?)
    }

    fn __len__(&self) -> usize {
        self.inner.steps.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Ledger(controller={:?}, n_steps={})",
            self.inner.meta.controller,
            self.inner.steps.len()
        )
    }
}

/// Simulates `scenario` under `"baseline"` or `"hem"`. The optional dictionary
/// overrides the controller settings.
#[pyfunction]
#[pyo3(signature = (scenario, controller = "hem", settings = None))]
fn run(py: Python<'_>, scenario: &PyScenario, controller: &str, settings: Option<&Bound<'_, PyDict>>) -> PyResult<PyLedger> {
    let scn = &scenario.inner;
    let ledger = match controller {
        "baseline" => {
            let cfg: BaselineConfig = from_py(settings)?;
            let mut c = BaselineController::new(cfg).map_err(err)?;
            py.detach(|| simulate(scn, &mut c))
        }
        "hem" => {
            let cfg: OptimizerConfig = from_py(settings)?;
            let mut c = HemController::new(cfg).map_err(err)?;
            py.detach(|| simulate(scn, &mut c))
        }
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown controller {other:?}; expected 'baseline' or 'hem'"
            )))
        }
    }
    .map_err(err)?;
    Ok(PyLedger { inner: ledger })
}

/// Side-by-side metrics of a baseline and a coordinated run of the same scenario.
#[pyfunction]
fn comparison<'py>(py: Python<'py>, baseline: &PyLedger, hem: &PyLedger) -> PyResult<Bound<'py, PyAny>> {
    let b = MetricsReport::from_ledger(&baseline.inner).map_err(err)?;
    let h = MetricsReport::from_ledger(&hem.inner).map_err(err)?;
    to_py(py, &compare(&b, &h).map_err(err)?)
}

/// Deferral efficiency in percent from deferred and deferrable energy.
#[pyfunction]
fn deferral_efficiency(deferred: f64, deferrable: f64) -> PyResult<f64> {
    hemsim::metrics::deferral_efficiency(deferred, deferrable).map_err(err)
}

#[pymodule]
pub fn pyhemsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyLedger>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(comparison, m)?)?;
    m.add_function(wrap_pyfunction!(deferral_efficiency, m)?)?;
    Ok(())
}
