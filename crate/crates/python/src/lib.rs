//! Python bindings: presets, time marching, convergence tables and the
//! von Neumann stability analyzer.

use ader_core::grid::{cell_averages, error_norms, BoundaryKind, CellField, Grid, Norms};
use ader_core::presets::{Preset, PresetName};
use ader_core::solver::{clip_dt, compute_dt, convergence_study, Stepper};
use ader_core::stability::{self, PredictorKind, StabilityQuery, DEFAULT_SCENARIOS, THETA_SAMPLES};
use ader_core::systems::BalanceLaw;
use ader_core::{Error, RunConfig as CoreConfig};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidConfig(_) | Error::InvalidGrid(_) | Error::UnsupportedQuadrature(_) => {
            PyValueError::new_err(e.to_string())
        }
        Error::InCell { cell, source } => PyRuntimeError::new_err(format!("in cell {cell}: {source}")),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

fn norms_dict<'py>(py: Python<'py>, n: &Norms) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("linf", n.linf)?;
    d.set_item("l1", n.l1)?;
    d.set_item("l2", n.l2)?;
    Ok(d)
}

/// Run parameters shared by the predictor, the update and the driver.
#[pyclass(name = "RunConfig", from_py_object)]
#[derive(Clone)]
pub struct PyRunConfig {
    inner: CoreConfig,
}

#[pymethods]
impl PyRunConfig {
    #[new]
    #[pyo3(signature = (order=3, cfl=0.1, alpha=1.0, t_out=1.0, boundary="periodic", tolerance=1e-12, max_iterations=50))]
    fn new(
        order: usize,
        cfl: f64,
        alpha: f64,
        t_out: f64,
        boundary: &str,
        tolerance: f64,
        max_iterations: usize,
    ) -> PyResult<Self> {
        let inner = CoreConfig {
            order,
            cfl,
            alpha,
            t_out,
            boundary: parse(boundary)?,
            tolerance,
            max_iterations,
            ..CoreConfig::default()
        };
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order
    }
    #[getter]
    fn cfl(&self) -> f64 {
        self.inner.cfl
    }
    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }
    #[getter]
    fn t_out(&self) -> f64 {
        self.inner.t_out
    }
    #[getter]
    fn boundary(&self) -> String {
        self.inner.boundary.to_string()
    }
    #[getter]
    fn tolerance(&self) -> f64 {
        self.inner.tolerance
    }
    #[getter]
    fn max_iterations(&self) -> usize {
        self.inner.max_iterations
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "RunConfig(order={}, cfl={}, alpha={}, t_out={}, boundary='{}')",
            c.order, c.cfl, c.alpha, c.t_out, c.boundary
        )
    }
}

/// Names of the built-in test cases.
#[pyfunction]
fn presets() -> Vec<&'static str> {
    PresetName::ALL.iter().map(|p| p.as_str()).collect()
}

/// Default run parameters of a preset.
#[pyfunction]
fn preset_config(name: &str) -> PyResult<PyRunConfig> {
    Ok(PyRunConfig {
        inner: Preset::get(parse(name)?).config,
    })
}

/// A preset marched in time from its initial cell averages.
#[pyclass]
pub struct Simulation {
    preset: Preset,
    grid: Grid,
    config: CoreConfig,
    field: CellField,
    time: f64,
    steps: usize,
}

impl Simulation {
    fn stepper(&self) -> PyResult<Stepper<'_, ader_core::System>> {
        Stepper::new(&self.preset.system, self.grid, self.config.clone()).map_err(to_py)
    }

    fn exact_at(&self, t: f64) -> Option<Vec<Vec<f64>>> {
        let sys = &self.preset.system;
        sys.exact_solution(self.grid.x_lo, 0.0)?;
        Some(cell_averages(&self.grid, |x| sys.exact_solution(x, t).expect("closed form")))
    }
}

#[pymethods]
impl Simulation {
    /// Unset arguments fall back to the preset; `config` replaces every run parameter.
    #[new]
    #[pyo3(signature = (preset, cells=None, order=None, cfl=None, alpha=None, t_out=None, boundary=None, config=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        preset: &str,
        cells: Option<usize>,
        order: Option<usize>,
        cfl: Option<f64>,
        alpha: Option<f64>,
        t_out: Option<f64>,
        boundary: Option<&str>,
        config: Option<PyRunConfig>,
    ) -> PyResult<Self> {
        let preset = Preset::get(parse(preset)?);
        let base = config.map_or_else(|| preset.config.clone(), |c| c.inner);
        let boundary: Option<BoundaryKind> = boundary.map(parse).transpose()?;
        let config = CoreConfig {
            order: order.unwrap_or(base.order),
            cfl: cfl.unwrap_or(base.cfl),
            alpha: alpha.unwrap_or(base.alpha),
            t_out: t_out.unwrap_or(base.t_out),
            boundary: boundary.unwrap_or(base.boundary),
            ..base
        };
        let grid = Grid::new(preset.domain.0, preset.domain.1, cells.unwrap_or(preset.cells)).map_err(to_py)?;
        let stepper = Stepper::new(&preset.system, grid, config.clone()).map_err(to_py)?;
        let field = stepper.initial_field().map_err(to_py)?;
        Ok(Self {
            grid,
            config,
            field,
            time: 0.0,
            steps: 0,
            preset,
        })
    }

    #[getter]
    fn time(&self) -> f64 {
        self.time
    }
    #[getter]
    fn steps(&self) -> usize {
        self.steps
    }
    #[getter]
    fn config(&self) -> PyRunConfig {
        PyRunConfig {
            inner: self.config.clone(),
        }
    }
    #[getter]
    fn n_vars(&self) -> usize {
        self.field.n_vars()
    }
    #[getter]
    fn dx(&self) -> f64 {
        self.grid.dx
    }

    /// Cell centres.
    #[getter]
    fn x(&self) -> Vec<f64> {
        self.grid.centers()
    }

    /// Cell averages, one list of unknowns per cell.
    fn values(&self) -> Vec<Vec<f64>> {
        (0..self.grid.n_cells)
            .map(|i| self.field.cell(i as isize).to_vec())
            .collect()
    }

    /// Averages of unknown `var` over every cell.
    fn component(&self, var: usize) -> PyResult<Vec<f64>> {
        if var >= self.field.n_vars() {
            return Err(PyValueError::new_err(format!("unknown {var} out of range")));
        }
        Ok(self.field.component(var))
    }

    /// Exact cell averages at the current time, `None` without a closed form.
    fn exact(&self) -> Option<Vec<Vec<f64>>> {
        self.exact_at(self.time)
    }

    /// Per-unknown `{"linf", "l1", "l2"}` errors, `None` without a closed form.
    fn error_norms<'py>(&self, py: Python<'py>) -> PyResult<Option<Vec<Bound<'py, PyDict>>>> {
        let sys = &self.preset.system;
        if sys.exact_solution(self.grid.x_lo, 0.0).is_none() {
            return Ok(None);
        }
        let norms = error_norms(&self.field, &self.grid, |x, t| sys.exact_solution(x, t).expect("closed form"), self.time);
        norms.iter().map(|n| norms_dict(py, n)).collect::<PyResult<_>>().map(Some)
    }

    /// `Σ Δx Q` per unknown.
    fn totals(&self) -> Vec<f64> {
        self.field.totals(self.grid.dx)
    }

    /// One step of size `dt` (CFL step when omitted); returns the step used.
    #[pyo3(signature = (dt=None))]
    fn step(&mut self, py: Python<'_>, dt: Option<f64>) -> PyResult<f64> {
        let dt = match dt {
            Some(dt) if dt > 0.0 && dt.is_finite() => dt,
            Some(dt) => return Err(PyValueError::new_err(format!("time step must be positive, got {dt}"))),
            None => compute_dt(&self.preset.system, &self.field, self.config.cfl, self.grid.dx, self.config.max_dt)
                .map_err(to_py)?,
        };
        let stepper = self.stepper()?;
        let mut field = self.field.clone();
        py.detach(|| stepper.step(&mut field, dt)).map_err(to_py)?;
        self.field = field;
        self.time += dt;
        self.steps += 1;
        Ok(dt)
    }

    /// CFL steps up to `t_end` (the configured output time when omitted), landing on it exactly.
    #[pyo3(signature = (t_end=None))]
    fn run(&mut self, py: Python<'_>, t_end: Option<f64>) -> PyResult<usize> {
        let t_end = t_end.unwrap_or(self.config.t_out);
        let stepper = self.stepper()?;
        let sys = &self.preset.system;
        let (grid, config) = (self.grid, &self.config);
        let mut field = self.field.clone();
        let mut t = self.time;
        let mut taken = 0;
        let outcome = py.detach(|| -> ader_core::Result<()> {
            while t < t_end {
                let nominal = compute_dt(sys, &field, config.cfl, grid.dx, config.max_dt)?;
                let dt = clip_dt(t, t_end, nominal);
                stepper.step(&mut field, dt)?;
                t = if dt == nominal { t + dt } else { t_end };
                taken += 1;
            }
            Ok(())
        });
        outcome.map_err(to_py)?;
        self.field = field;
        self.time = t;
        self.steps += taken;
        Ok(taken)
    }

    fn __repr__(&self) -> String {
        format!(
            "Simulation(preset='{}', cells={}, order={}, time={})",
            self.preset.name, self.grid.n_cells, self.config.order, self.time
        )
    }
}

/// Error table of a preset over `meshes`; one dict per mesh.
#[pyfunction]
#[pyo3(signature = (preset, order=None, meshes=vec![16, 32, 64, 128]))]
fn convergence<'py>(
    py: Python<'py>,
    preset: &str,
    order: Option<usize>,
    meshes: Vec<usize>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let p = Preset::get(parse(preset)?);
    let config = CoreConfig {
        order: order.unwrap_or(p.config.order),
        ..p.config.clone()
    };
    let rows = py
        .detach(|| convergence_study(&p.system, &config, p.domain, &meshes, p.tracked_var))
        .map_err(to_py)?;
    rows.iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("order", r.order)?;
            d.set_item("mesh", r.mesh)?;
            d.set_item("errors", norms_dict(py, &r.errors)?)?;
            d.set_item("orders", norms_dict(py, &r.orders)?)?;
            d.set_item("cpu_s", r.cpu_seconds)?;
            Ok(d)
        })
        .collect()
}

fn query(order: usize, predictor: &str, alpha: f64, scenarios: usize, thetas: usize, seed: u64) -> PyResult<StabilityQuery> {
    let q = StabilityQuery {
        order,
        predictor: parse(predictor)?,
        alpha,
        theta_samples: thetas,
        scenarios,
        seed,
    };
    q.validate().map_err(to_py)?;
    Ok(q)
}

/// Amplification factor of one Fourier mode for fixed WENO weights.
#[pyfunction]
#[pyo3(signature = (theta, c, r, weights, order, predictor="explicit", alpha=1.0))]
fn amplitude(
    theta: f64,
    c: f64,
    r: f64,
    weights: [f64; 3],
    order: usize,
    predictor: &str,
    alpha: f64,
) -> PyResult<Complex64> {
    query(order, predictor, alpha, 1, 1, 0)?;
    let m = order - 1;
    Ok(match parse::<PredictorKind>(predictor)? {
        PredictorKind::Explicit => stability::amplitude_explicit(theta, c, r, weights, m, alpha),
        PredictorKind::Implicit => stability::amplitude_implicit(theta, c, r, weights, m, alpha),
    })
}

/// Fraction of random weight scenarios with `|A| <= 1` over every sampled phase.
#[pyfunction]
#[pyo3(signature = (c, r, order, predictor="explicit", alpha=1.0, scenarios=DEFAULT_SCENARIOS, thetas=THETA_SAMPLES, seed=0))]
#[allow(clippy::too_many_arguments)]
fn stability_fraction(
    c: f64,
    r: f64,
    order: usize,
    predictor: &str,
    alpha: f64,
    scenarios: usize,
    thetas: usize,
    seed: u64,
) -> PyResult<f64> {
    stability::stability_fraction(c, r, &query(order, predictor, alpha, scenarios, thetas, seed)?).map_err(to_py)
}

/// Stable fractions on a `(c, r)` grid.
#[pyclass(name = "StabilityMap")]
pub struct PyStabilityMap {
    inner: stability::StabilityMap,
}

#[pymethods]
impl PyStabilityMap {
    #[getter]
    fn c(&self) -> Vec<f64> {
        self.inner.c.clone()
    }
    #[getter]
    fn r(&self) -> Vec<f64> {
        self.inner.r.clone()
    }
    /// Row-major over `r` then `c`.
    #[getter]
    fn fractions(&self) -> Vec<f64> {
        self.inner.fractions.clone()
    }

    fn get(&self, ic: usize, ir: usize) -> PyResult<f64> {
        if ic >= self.inner.c.len() || ir >= self.inner.r.len() {
            return Err(PyValueError::new_err("grid index out of range"));
        }
        Ok(self.inner.get(ic, ir))
    }

    fn stable_area(&self) -> f64 {
        self.inner.stable_area()
    }

    /// `c,r,stable_fraction` rows with a header.
    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner
            .write_csv(&mut buf)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok(String::from_utf8(buf).expect("ascii output"))
    }
}

/// Stable fractions over `c_grid × r_grid`; defaults to the standard raster.
#[pyfunction]
#[pyo3(signature = (order, predictor="explicit", alpha=1.0, c_grid=None, r_grid=None, scenarios=DEFAULT_SCENARIOS, thetas=THETA_SAMPLES, seed=0))]
#[allow(clippy::too_many_arguments)]
fn stability_map(
    py: Python<'_>,
    order: usize,
    predictor: &str,
    alpha: f64,
    c_grid: Option<Vec<f64>>,
    r_grid: Option<Vec<f64>>,
    scenarios: usize,
    thetas: usize,
    seed: u64,
) -> PyResult<PyStabilityMap> {
    let q = query(order, predictor, alpha, scenarios, thetas, seed)?;
    let c = c_grid.unwrap_or_else(stability::default_c_grid);
    let r = r_grid.unwrap_or_else(stability::default_r_grid);
    let inner = py.detach(|| stability::stability_map(&c, &r, &q)).map_err(to_py)?;
    Ok(PyStabilityMap { inner })
}

#[pymodule]
fn ader(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyRunConfig>()?;
    m.add_class::<Simulation>()?;
    m.add_class::<PyStabilityMap>()?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(preset_config, m)?)?;
    m.add_function(wrap_pyfunction!(convergence, m)?)?;
    m.add_function(wrap_pyfunction!(amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(stability_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(stability_map, m)?)?;
    Ok(())
}
