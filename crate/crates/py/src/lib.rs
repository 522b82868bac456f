//! Python bindings: grids, flow states, gauges, the solver, the optimizer
//! over Python callables, and the configuration-driven workflows.

use std::path::PathBuf;

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use floodopt::error::Category;
use floodopt::gauge::{rasterize_gauge, GaugeLine, GaugeObserver, Side};
use floodopt::io::{load_config, map, optimize, simulate};
use floodopt::optimizer::{ascend, gradient, Objective, OptimizerState, ProbeRule, StoppingRule};
use floodopt::solver::{BoundaryKind, Boundaries, Observer, Solver, SolverConfig};
use floodopt::terrain::{read_dem, write_dem, DemOptions};
use floodopt::{Error, FlowState, Point, Polygon, SimGrid};

fn py_err(e: Error) -> PyErr {
    let msg = e.to_string();
    match e.category() {
        Category::Config => PyValueError::new_err(msg),
        Category::Io => PyOSError::new_err(msg),
        Category::Numeric => PyArithmeticError::new_err(msg),
        Category::Domain => PyRuntimeError::new_err(msg),
    }
}

fn wrap<T>(r: floodopt::Result<T>) -> PyResult<T> {
    r.map_err(py_err)
}

/// Uniform rectangular grid with bed elevation and Manning coefficients.
#[pyclass(name = "Grid", module = "floodopt")]
#[derive(Clone)]
struct PyGrid {
    inner: SimGrid,
}

#[pymethods]
impl PyGrid {
    /// `bed` is row-major from the south-west corner; `manning` is a scalar
    /// or one value per cell.
    #[new]
    #[pyo3(signature = (nx, ny, dx, dy, bed, manning = None, origin = (0.0, 0.0)))]
    fn new(nx: usize, ny: usize, dx: f64, dy: f64, bed: Vec<f64>, manning: Option<&Bound<'_, PyAny>>, origin: (f64, f64)) -> PyResult<Self> {
        let manning = match manning {
            None => vec![0.03; nx * ny],
            Some(m) => match m.extract::<f64>() {
                Ok(n) => vec![n; nx * ny],
                Err(_) => m.extract::<Vec<f64>>()?,
            },
        };
        Ok(Self {
            inner: wrap(SimGrid::new(nx, ny, dx, dy, origin, bed, manning))?,
        })
    }

    /// Reads an ESRI ASCII grid.
    #[staticmethod]
    #[pyo3(signature = (path, manning = 0.03))]
    fn from_asc(path: PathBuf, manning: f64) -> PyResult<Self> {
        let opts = DemOptions {
            manning,
            ..DemOptions::default()
        };
        Ok(Self {
            inner: wrap(read_dem(&path, &opts))?.grid,
        })
    }

    fn to_asc(&self, path: PathBuf) -> PyResult<()> {
        wrap(write_dem(&path, &self.inner, None, -9999.0))
    }

    #[getter]
    fn nx(&self) -> usize {
        self.inner.nx
    }
    #[getter]
    fn ny(&self) -> usize {
        self.inner.ny
    }
    #[getter]
    fn dx(&self) -> f64 {
        self.inner.dx
    }
    #[getter]
    fn dy(&self) -> f64 {
        self.inner.dy
    }
    #[getter]
    fn origin(&self) -> (f64, f64) {
        (self.inner.origin_x, self.inner.origin_y)
    }
    #[getter]
    fn bed(&self) -> Vec<f64> {
        self.inner.bed.clone()
    }

    fn __repr__(&self) -> String {
        let g = &self.inner;
        format!("Grid(nx={}, ny={}, dx={}, dy={})", g.nx, g.ny, g.dx, g.dy)
    }
}

/// Depth and unit discharges per cell at time `t`.
#[pyclass(name = "State", module = "floodopt")]
#[derive(Clone)]
struct PyState {
    inner: FlowState,
}

#[pymethods]
impl PyState {
    #[new]
    #[pyo3(signature = (h, hu, hv, t = 0.0))]
    fn new(h: Vec<f64>, hu: Vec<f64>, hv: Vec<f64>, t: f64) -> PyResult<Self> {
        if hu.len() != h.len() || hv.len() != h.len() {
            return Err(PyValueError::new_err("h, hu and hv must have equal lengths"));
        }
        Ok(Self {
            inner: FlowState { h, hu, hv, t },
        })
    }

    #[staticmethod]
    #[pyo3(signature = (grid, t = 0.0))]
    fn dry(grid: &PyGrid, t: f64) -> Self {
        Self {
            inner: FlowState::dry(&grid.inner, t),
        }
    }

    #[staticmethod]
    fn lake_at_rest(grid: &PyGrid, level: f64) -> Self {
        Self {
            inner: FlowState::lake_at_rest(&grid.inner, level),
        }
    }

    #[getter]
    fn h(&self) -> Vec<f64> {
        self.inner.h.clone()
    }
    #[getter]
    fn hu(&self) -> Vec<f64> {
        self.inner.hu.clone()
    }
    #[getter]
    fn hv(&self) -> Vec<f64> {
        self.inner.hv.clone()
    }
    #[getter]
    fn t(&self) -> f64 {
        self.inner.t
    }

    fn volume(&self, grid: &PyGrid) -> f64 {
        self.inner.volume(&grid.inner)
    }
}

/// Polyline cross-section from `a` to `b`; positive discharge crosses
/// toward `side` of the direction a -> b.
#[pyclass(name = "Gauge", module = "floodopt")]
struct PyGauge {
    line: GaugeLine,
}

#[pymethods]
impl PyGauge {
    #[new]
    #[pyo3(signature = (grid, a, b, side = "left"))]
    fn new(grid: &PyGrid, a: (f64, f64), b: (f64, f64), side: &str) -> PyResult<Self> {
        let side = match side {
            "left" => Side::Left,
            "right" => Side::Right,
            other => return Err(PyValueError::new_err(format!("side must be 'left' or 'right', got {other:?}"))),
        };
        Ok(Self {
            line: wrap(rasterize_gauge(&grid.inner, Point::new(a.0, a.1), Point::new(b.0, b.1), side))?,
        })
    }

    #[getter]
    fn length(&self) -> f64 {
        self.line.total_length()
    }
}

fn boundary(kind: &str) -> PyResult<BoundaryKind> {
    match kind {
        "wall" => Ok(BoundaryKind::Wall),
        "waterfall" => Ok(BoundaryKind::Waterfall),
        other => Err(PyValueError::new_err(format!("boundary must be 'wall' or 'waterfall', got {other:?}"))),
    }
}

/// Advances `state` to `t_end` without inflow. Returns the new state and,
/// with gauges, one `(t_s, q_m3s, cumulative_m3)` list per gauge.
#[pyfunction]
#[pyo3(signature = (grid, state, t_end, boundaries = "wall", friction = true, gauges = Vec::new()))]
fn run(
    py: Python<'_>,
    grid: &PyGrid,
    state: &PyState,
    t_end: f64,
    boundaries: &str,
    friction: bool,
    gauges: Vec<PyRef<'_, PyGauge>>,
) -> PyResult<(PyState, Vec<Vec<(f64, f64, f64)>>)> {
    let cfg = SolverConfig {
        boundaries: Boundaries::all(boundary(boundaries)?),
        friction,
        ..SolverConfig::default()
    };
    let lines: Vec<GaugeLine> = gauges.iter().map(|g| g.line.clone()).collect();
    let g = &grid.inner;
    let mut s = state.inner.clone();
    let window = (s.t, t_end);
    let records = py.allow_threads(|| {
        let mut observers: Vec<GaugeObserver<'_>> = lines.iter().map(|l| GaugeObserver::new(l, window)).collect();
        let mut refs: Vec<&mut dyn Observer> = observers.iter_mut().map(|o| o as &mut dyn Observer).collect();
        Solver::new(g, cfg).run(&mut s, None, t_end, &mut refs)?;
        Ok::<_, Error>(observers.into_iter().map(|o| o.record).collect::<Vec<_>>())
    });
    let records = wrap(records)?;
    let series = records
        .iter()
        .map(|r| r.samples.iter().map(|x| (x.t, x.q, x.cumulative)).collect())
        .collect();
    Ok((PyState { inner: s }, series))
}

/// Objective backed by a Python callable `f(x, y) -> float`.
struct Callback(Py<PyAny>);

impl Callback {
    fn call(&self, p: Point) -> floodopt::Result<f64> {
        Python::with_gil(|py| {
            self.0
                .call1(py, (p.x, p.y))
                .and_then(|v| v.extract::<f64>(py))
                .map_err(|e| Error::Domain(format!("objective at ({}, {}): {e}", p.x, p.y)))
        })
    }
}

fn objective(f: Py<PyAny>, region: Vec<(f64, f64)>) -> PyResult<Objective<impl Fn(Point) -> floodopt::Result<f64> + Sync>> {
    let cb = Callback(f);
    let region = Polygon::new(region.into_iter().map(|(x, y)| Point::new(x, y)).collect());
    wrap(Objective::new(move |p: Point| cb.call(p), region, None))
}

/// Forward-difference gradient of `f` at `(x, y)` inside `region`.
#[pyfunction]
fn py_gradient(py: Python<'_>, f: Py<PyAny>, x: f64, y: f64, delta: (f64, f64), region: Vec<(f64, f64)>) -> PyResult<(f64, f64)> {
    let obj = objective(f, region)?;
    let probe = ProbeRule {
        delta_x: delta.0,
        delta_y: delta.1,
    };
    wrap(py.allow_threads(|| gradient(&obj, Point::new(x, y), &probe)))
}

fn state_dict<'py>(py: Python<'py>, st: &OptimizerState) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new_bound(py);
    d.set_item("x_d", st.r_d.x)?;
    d.set_item("y_d", st.r_d.y)?;
    d.set_item("V_A", st.v)?;
    d.set_item("iterations", st.k)?;
    d.set_item("termination", format!("{:?}", st.termination))?;
    let trace: Vec<(usize, f64, f64, f64, f64, f64, f64)> = st
        .history
        .iter()
        .map(|it| (it.k, it.r.x, it.r.y, it.v, it.grad.0, it.grad.1, it.lambda))
        .collect();
    d.set_item("trace", trace)?;
    Ok(d)
}

/// Gradient ascent of `f` from `start` inside `region`. Returns a dict with
/// the terminal point, value, termination reason and the trace rows
/// `(k, x_d, y_d, V_A, grad_x, grad_y, lambda)`.
#[pyfunction]
#[pyo3(signature = (f, start, region, delta, tol, initial_step, min_step, k_max = 50, shrink = 0.5))]
#[allow(clippy::too_many_arguments)]
fn py_ascend<'py>(
    py: Python<'py>,
    f: Py<PyAny>,
    start: (f64, f64),
    region: Vec<(f64, f64)>,
    delta: (f64, f64),
    tol: f64,
    initial_step: f64,
    min_step: f64,
    k_max: usize,
    shrink: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let obj = objective(f, region)?;
    let probe = ProbeRule {
        delta_x: delta.0,
        delta_y: delta.1,
    };
    let stop = StoppingRule {
        tol,
        k_max,
        initial_step,
        min_step,
        shrink,
    };
    let st = wrap(py.allow_threads(|| ascend(&obj, Point::new(start.0, start.1), &probe, &stop)))?;
    state_dict(py, &st)
}

/// Checks a configuration; returns it with every default filled in.
#[pyfunction]
fn validate(config: PathBuf) -> PyResult<String> {
    wrap(wrap(load_config(&config))?.dump())
}

/// Runs the configured flood into `out`; returns the mass balance and the
/// gauge volume.
#[pyfunction]
#[pyo3(name = "simulate")]
fn py_simulate<'py>(py: Python<'py>, config: PathBuf, out: PathBuf) -> PyResult<Bound<'py, PyDict>> {
    let cfg = wrap(load_config(&config))?;
    let o = wrap(py.allow_threads(|| simulate(&cfg, &out)))?;
    let d = PyDict::new_bound(py);
    d.set_item("steps", o.steps)?;
    d.set_item("max_froude", o.max_froude)?;
    d.set_item("initial_volume", o.mass.initial)?;
    d.set_item("final_volume", o.mass.final_volume)?;
    d.set_item("injected", o.mass.injected)?;
    d.set_item("outflow", o.mass.outflow)?;
    d.set_item("mass_error", o.mass.error())?;
    d.set_item("gauge_volume", o.gauge.as_ref().map(|g| g.volume))?;
    Ok(d)
}

/// Runs the configured optimization into `out`; returns the best run and
/// the baseline (no dam) value.
#[pyfunction]
#[pyo3(name = "optimize")]
fn py_optimize<'py>(py: Python<'py>, config: PathBuf, out: PathBuf) -> PyResult<Bound<'py, PyDict>> {
    let cfg = wrap(load_config(&config))?;
    let o = wrap(py.allow_threads(|| optimize(&cfg, &out)))?;
    let d = state_dict(py, o.best_run())?;
    d.set_item("baseline_V_A", o.baseline)?;
    d.set_item("evaluations", o.evaluations)?;
    Ok(d)
}

/// Samples the configured objective surface into `out`; returns
/// `(x_d, y_d, V_A or None)` rows.
#[pyfunction]
#[pyo3(name = "map_surface")]
fn py_map(py: Python<'_>, config: PathBuf, out: PathBuf) -> PyResult<Vec<(f64, f64, Option<f64>)>> {
    let cfg = wrap(load_config(&config))?;
    let s = wrap(py.allow_threads(|| map(&cfg, &out)))?;
    Ok(s.into_iter().map(|s| (s.x, s.y, s.value.ok())).collect())
}

#[pymodule]
#[pyo3(name = "floodopt")]
fn floodopt_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PyGauge>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("gradient", wrap_pyfunction!(py_gradient, m)?)?;
    m.add("ascend", wrap_pyfunction!(py_ascend, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(py_simulate, m)?)?;
    m.add_function(wrap_pyfunction!(py_optimize, m)?)?;
    m.add_function(wrap_pyfunction!(py_map, m)?)?;
    Ok(())
}
