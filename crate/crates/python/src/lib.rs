//! Python bindings: grids, spectral operators, time stepping, heat kernels and
//! the run/analyze/report pipeline.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyFileNotFoundError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyFloat, PyList, PyString};
use serde::Serialize;
use serde_json::Value;

use fkpp::config::{parse_config, resolve_output, ExperimentConfig};
use fkpp::dynamics::{EtdIntegrator, Scheme, SimulationState, StepperConfig};
use fkpp::experiment::{analyze_and_write, initial_field, report_run, run_experiment, AnalyzeOptions};
use fkpp::reaction::ReactionModel;
use fkpp::{kernel, snapshot, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NoSnapshots(_) => PyFileNotFoundError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => PyFloat::new(py, n.as_f64().unwrap_or(f64::NAN)).into_any(),
        },
        Value::String(s) => PyString::new(py, s).into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &v)
}

/// Uniform periodic grid on `[-L/2, L/2)^dim`.
#[pyclass(module = "pyfkpp", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Grid {
    inner: fkpp::Grid,
}

#[pymethods]
impl Grid {
    #[new]
    fn new(dim: usize, n: usize, length: f64) -> PyResult<Self> {
        Ok(Self {
            inner: fkpp::Grid::new(dim, n, length).map_err(py_err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn length(&self) -> f64 {
        self.inner.length()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.inner.spacing()
    }

    /// Coordinates along one axis.
    fn axis(&self) -> Vec<f64> {
        (0..self.inner.n()).map(|i| self.inner.coordinate(i)).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Grid({})", self.inner)
    }
}

/// Fourier multipliers for `Λ^α`, gradient and Hessian on one grid.
#[pyclass(module = "pyfkpp", frozen)]
struct SpectralOperator {
    inner: Arc<fkpp::SpectralOperator>,
}

impl SpectralOperator {
    fn field(&self, values: Vec<f64>) -> PyResult<fkpp::Field> {
        fkpp::Field::new(*self.inner.grid(), values, 0.0).map_err(py_err)
    }
}

#[pymethods]
impl SpectralOperator {
    #[new]
    fn new(grid: &Grid, alpha: f64) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(fkpp::SpectralOperator::new(grid.inner, alpha).map_err(py_err)?),
        })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    /// `Λ^α u` for row-major samples `u`.
    fn frac_laplacian(&self, values: Vec<f64>) -> PyResult<Vec<f64>> {
        let f = self.field(values)?;
        Ok(self.inner.apply_frac_laplacian(&f).map_err(py_err)?.into_values())
    }

    /// One list of samples per axis.
    fn gradient(&self, values: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let f = self.field(values)?;
        Ok(self
            .inner
            .gradient(&f)
            .map_err(py_err)?
            .into_iter()
            .map(|g| g.into_values())
            .collect())
    }

    fn multipliers(&self) -> Vec<f64> {
        self.inner.frac_multiplier().to_vec()
    }
}

/// A time-stepped solution of `∂t u + Λ^α u = f(u)`.
#[pyclass(module = "pyfkpp")]
struct Simulation {
    state: SimulationState,
    integrator: EtdIntegrator,
}

#[pymethods]
impl Simulation {
    /// Logistic reaction with growth rate `kappa` from explicit samples.
    #[new]
    #[pyo3(signature = (grid, alpha, values, kappa = 1.0, dt = 0.01, scheme = "ETDRK2", dealias = false))]
    fn new(
        grid: &Grid,
        alpha: f64,
        values: Vec<f64>,
        kappa: f64,
        dt: f64,
        scheme: &str,
        dealias: bool,
    ) -> PyResult<Self> {
        let op = Arc::new(fkpp::SpectralOperator::new(grid.inner, alpha).map_err(py_err)?);
        let reaction = ReactionModel::logistic_with_rate(kappa).map_err(py_err)?;
        let field = fkpp::Field::new(grid.inner, values, 0.0).map_err(py_err)?;
        let cfg = StepperConfig {
            dt,
            scheme: scheme.parse::<Scheme>().map_err(py_err)?,
            dealias,
        };
        Self::build(field, op, reaction, cfg)
    }

    /// Initial state described by a TOML config file.
    #[staticmethod]
    fn from_config(path: PathBuf) -> PyResult<Self> {
        let cfg = ExperimentConfig::from_path(&path).map_err(py_err)?;
        Self::from_experiment(&cfg)
    }

    /// Initial state described by TOML text.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let cfg = parse_config(text).map_err(py_err)?;
        Self::from_experiment(&cfg)
    }

    /// Advances `steps` time steps.
    #[pyo3(signature = (steps = 1))]
    fn step(&mut self, py: Python<'_>, steps: usize) -> PyResult<()> {
        for _ in 0..steps {
            self.state = py
                .detach(|| self.integrator.step(&self.state))
                .map_err(py_err)?;
        }
        Ok(())
    }

    /// Steps until `t >= t_end`.
    fn advance_to(&mut self, py: Python<'_>, t_end: f64) -> PyResult<()> {
        let dt = self.integrator.config().dt;
        while self.state.time() + 0.5 * dt < t_end {
            self.step(py, 1)?;
        }
        Ok(())
    }

    #[getter]
    fn time(&self) -> f64 {
        self.state.time()
    }

    #[getter]
    fn steps(&self) -> u64 {
        self.state.step_count
    }

    /// Spreading exponent `κ/(d + α)`.
    #[getter]
    fn spreading_rate(&self) -> f64 {
        self.state.lambda
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.state.field.values().to_vec()
    }

    fn min(&self) -> f64 {
        self.state.field.min()
    }

    fn max(&self) -> f64 {
        self.state.field.max()
    }

    /// Writes the current state in the binary snapshot format.
    fn save(&self, path: PathBuf) -> PyResult<()> {
        snapshot::write_snapshot(&path, &self.state.field, self.state.op.alpha(), self.state.reaction.kappa())
            .map_err(py_err)
    }
}

impl Simulation {
    fn build(
        field: fkpp::Field,
        op: Arc<fkpp::SpectralOperator>,
        reaction: ReactionModel,
        cfg: StepperConfig,
    ) -> PyResult<Self> {
        let integrator = EtdIntegrator::new(Arc::clone(&op), cfg, &reaction).map_err(py_err)?;
        let state = SimulationState::new(field, op, reaction).map_err(py_err)?;
        Ok(Self { state, integrator })
    }

    fn from_experiment(cfg: &ExperimentConfig) -> PyResult<Self> {
        let grid = cfg.grid().map_err(py_err)?;
        let op = Arc::new(fkpp::SpectralOperator::new(grid, cfg.alpha).map_err(py_err)?);
        let reaction = cfg.reaction.build().map_err(py_err)?;
        let field = initial_field(cfg).map_err(py_err)?;
        Self::build(field, op, reaction, cfg.stepper())
    }
}

/// `(value, abs_err)` of the α-stable heat kernel at radius `r` and time `t`.
#[pyfunction]
#[pyo3(signature = (alpha, dim, r, t = 1.0))]
fn kernel_value(alpha: f64, dim: usize, r: f64, t: f64) -> PyResult<(f64, f64)> {
    let e = kernel::kernel_value(alpha, dim, r, t).map_err(py_err)?;
    Ok((e.value, e.abs_err))
}

/// Radial profile at `t = 1` with its fitted tail, as a dict.
#[pyfunction]
#[pyo3(signature = (alpha, dim, r_max = 1000.0, samples = 200))]
fn kernel_profile(py: Python<'_>, alpha: f64, dim: usize, r_max: f64, samples: usize) -> PyResult<Bound<'_, PyAny>> {
    let p = py
        .detach(|| kernel::eval_kernel_profile(alpha, dim, r_max, samples))
        .map_err(py_err)?;
    serialize(py, &p)
}

/// Runs a config and returns the manifest. Relative output directories are
/// resolved against `output_root` when given.
#[pyfunction]
#[pyo3(signature = (config, output_root = None))]
fn run_config(py: Python<'_>, config: PathBuf, output_root: Option<PathBuf>) -> PyResult<Bound<'_, PyAny>> {
    let cfg = ExperimentConfig::from_path(&config).map_err(py_err)?;
    let out = resolve_output(&cfg.output_dir, output_root);
    let manifest = py.detach(|| run_experiment(&cfg, &out)).map_err(py_err)?;
    serialize(py, &manifest)
}

/// Recomputes diagnostics and reductions for a run directory.
#[pyfunction]
#[pyo3(signature = (run_dir, levels = None))]
fn analyze(py: Python<'_>, run_dir: PathBuf, levels: Option<Vec<f64>>) -> PyResult<Bound<'_, PyAny>> {
    let report = py
        .detach(|| analyze_and_write(&run_dir, &AnalyzeOptions { levels }))
        .map_err(py_err)?;
    serialize(py, &report)
}

/// Writes and returns the per-criterion verdicts of a run directory.
#[pyfunction]
fn report(py: Python<'_>, run_dir: PathBuf) -> PyResult<Bound<'_, PyAny>> {
    let v = py.detach(|| report_run(&run_dir)).map_err(py_err)?;
    serialize(py, &v)
}

/// `(header, values)` of a snapshot file.
#[pyfunction]
fn read_snapshot(py: Python<'_>, path: PathBuf) -> PyResult<(Bound<'_, PyAny>, Vec<f64>)> {
    let (h, field) = snapshot::read_snapshot(&path).map_err(py_err)?;
    let header = PyDict::new(py);
    header.set_item("version", h.version)?;
    header.set_item("dim", h.dim)?;
    header.set_item("n", h.n_per_axis)?;
    header.set_item("length", h.length)?;
    header.set_item("alpha", h.alpha)?;
    header.set_item("kappa", h.kappa)?;
    header.set_item("time", h.time)?;
    Ok((header.into_any(), field.into_values()))
}

#[pymodule]
fn pyfkpp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Grid>()?;
    m.add_class::<SpectralOperator>()?;
    m.add_class::<Simulation>()?;
    m.add_function(wrap_pyfunction!(kernel_value, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_profile, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(report, m)?)?;
    m.add_function(wrap_pyfunction!(read_snapshot, m)?)?;
    Ok(())
}
