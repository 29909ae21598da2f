//! Python bindings: kernels, offspring laws, exact oracles and Monte Carlo jobs.
//!
//! Structured values cross the boundary as plain dicts and lists.

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use longarm_core::analysis;
use longarm_core::exact::{self, EventSpec, TinyGraph, WindowOperator};
use longarm_core::gw;
use longarm_core::job::{self, JobConfig};
use longarm_core::lrp::{self, PcJob, PercolationConfig};
use longarm_core::parallel::resolve_workers;
use longarm_core::rng::stream;
use longarm_core::{Alpha, Error, KernelSpec, OffspringDist, Shape};

fn err(e: Error) -> PyErr {
    match e {
        Error::NumericalGuard(_) | Error::NonBracketing(_) => PyRuntimeError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn parse_alpha(obj: &Bound<'_, PyAny>) -> PyResult<Alpha> {
    if let Ok(a) = obj.extract::<f64>() {
        return Ok(if a.is_infinite() { Alpha::Infinite } else { Alpha::Finite(a) });
    }
    let s: String = obj.extract()?;
    match s.to_ascii_lowercase().as_str() {
        "infinite" | "inf" => Ok(Alpha::Infinite),
        _ => Err(PyValueError::new_err(format!("alpha must be a number or 'infinite', got {s:?}"))),
    }
}

/// Step distribution `D` on `Z^d`.
#[pyclass(name = "Kernel", module = "longarm", frozen)]
pub struct PyKernel {
    inner: longarm_core::Kernel,
}

#[pymethods]
impl PyKernel {
    #[new]
    #[pyo3(signature = (d, alpha, lambda_ = 1.0, shape = "canonical", kappa = None, weights = None, tab_radius = None))]
    fn new(
        d: usize,
        alpha: &Bound<'_, PyAny>,
        lambda_: f64,
        shape: &str,
        kappa: Option<f64>,
        weights: Option<Vec<f64>>,
        tab_radius: Option<i64>,
    ) -> PyResult<Self> {
        let shape = match shape {
            "canonical" => Shape::Canonical,
            "bounded-uniform" => Shape::BoundedUniform,
            "exponential" => Shape::Exponential {
                kappa: kappa.ok_or_else(|| PyValueError::new_err("exponential shape needs kappa"))?,
            },
            "custom-table" => Shape::CustomTable {
                weights: weights.ok_or_else(|| PyValueError::new_err("custom-table shape needs weights"))?,
            },
            other => return Err(PyValueError::new_err(format!("unknown shape {other:?}"))),
        };
        let spec = KernelSpec { d, alpha: parse_alpha(alpha)?, lambda: lambda_, shape, tab_radius };
        spec.validate().map_err(err)?;
        Ok(PyKernel { inner: longarm_core::Kernel::build(&spec).map_err(err)? })
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha().value()
    }

    #[getter]
    fn norm_constant(&self) -> f64 {
        self.inner.norm_constant()
    }

    #[getter]
    fn max_pmf(&self) -> f64 {
        self.inner.max_pmf()
    }

    #[getter]
    fn p_max(&self) -> f64 {
        PercolationConfig::p_max(&self.inner)
    }

    fn spec(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, self.inner.spec())
    }

    fn pmf(&self, x: Vec<i64>) -> PyResult<f64> {
        if x.len() != self.inner.dim() {
            return Err(PyValueError::new_err(format!("point has {} coordinates, kernel is {}-dimensional", x.len(), self.inner.dim())));
        }
        Ok(self.inner.pmf(&x))
    }

    /// `P(|X|_inf > t)`.
    fn tail_mass(&self, t: i64) -> PyResult<f64> {
        self.inner.tail_mass(t).map_err(err)
    }

    fn shell_probability(&self, k: i64) -> f64 {
        self.inner.shell_probability(k)
    }

    #[pyo3(signature = (n, seed, index = 0))]
    fn sample_steps(&self, n: usize, seed: u64, index: u64) -> Vec<Vec<i64>> {
        let mut rng = stream(seed, index);
        (0..n).map(|_| self.inner.sample_step(&mut rng).coords().to_vec()).collect()
    }

    fn __repr__(&self) -> String {
        let s = self.inner.spec();
        format!("Kernel(d={}, alpha={}, lambda_={}, shape={:?})", s.d, s.alpha, s.lambda, s.shape)
    }
}

/// Critical offspring law: `"binary"`, `"geometric-half"` or a probability list.
#[pyclass(name = "Offspring", module = "longarm", frozen)]
pub struct PyOffspring {
    inner: OffspringDist,
}

#[pymethods]
impl PyOffspring {
    #[new]
    fn new(law: &Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(PyOffspring { inner: from_py(law)? })
    }

    #[getter]
    fn sigma_sq(&self) -> f64 {
        self.inner.sigma_sq()
    }

    fn prob(&self, m: usize) -> f64 {
        self.inner.prob(m)
    }

    fn pgf(&self, s: f64) -> f64 {
        self.inner.pgf(s)
    }

    /// `P(|T| = n)` for `n = 0..=n_max`.
    fn progeny_pmf(&self, n_max: usize) -> PyResult<Vec<f64>> {
        gw::total_progeny_pmf(&self.inner, n_max).map_err(err)
    }

    /// Same distribution by summing over all trees; `n_max <= 9`.
    fn progeny_by_enumeration(&self, n_max: usize) -> PyResult<Vec<f64>> {
        exact::progeny_by_enumeration(&self.inner, n_max).map_err(err)
    }

    /// `P(|T| >= s)` for `s = 0..=n_max`.
    fn progeny_tail(&self, n_max: usize) -> PyResult<Vec<f64>> {
        Ok(gw::survival_tail(&gw::total_progeny_pmf(&self.inner, n_max).map_err(err)?))
    }

    #[pyo3(signature = (n, seed, cap = 1_000_000))]
    fn sample_sizes(&self, py: Python<'_>, n: u64, seed: u64, cap: usize) -> Vec<usize> {
        let off = &self.inner;
        py.detach(|| (0..n).map(|i| gw::sample_size(off, cap, &mut stream(seed, i))).collect())
    }

    fn __repr__(&self) -> PyResult<String> {
        let law = serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(format!("Offspring({law})"))
    }
}

#[pyfunction]
fn exponents(py: Python<'_>, alpha: &Bound<'_, PyAny>) -> PyResult<Py<PyAny>> {
    to_py(py, &analysis::exponents(parse_alpha(alpha)?.value()).map_err(err)?)
}

#[pyfunction]
fn beta_constraints_hold(py: Python<'_>, alpha: f64, beta: f64) -> PyResult<Py<PyAny>> {
    to_py(py, &analysis::beta_constraints_hold(alpha, beta).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (hits, trials, level = 0.95))]
fn wilson_ci(hits: u64, trials: u64, level: f64) -> PyResult<(f64, f64)> {
    analysis::wilson_ci(hits, trials, level).map_err(err)
}

/// Fit of `ln value` against `ln r`; `points` holds `(r, value, stderr)`.
#[pyfunction]
fn loglog_fit(py: Python<'_>, points: Vec<(f64, f64, f64)>) -> PyResult<Py<PyAny>> {
    to_py(py, &analysis::loglog_fit(&points).map_err(err)?)
}

/// Green's function of the walk killed outside `Q_radius`, summed to `steps`.
#[pyfunction]
fn green_function(py: Python<'_>, kernel: &PyKernel, steps: usize, radius: i64) -> PyResult<Py<PyAny>> {
    let k = &kernel.inner;
    let (g, residual) = py
        .detach(|| -> longarm_core::Result<_> {
            let g = exact::green_function(k, steps, radius)?;
            let op = WindowOperator::new(k, radius)?;
            let residual = exact::renewal_residual(&op, &g.field);
            Ok((g, residual))
        })
        .map_err(err)?;
    let axis: Vec<f64> = g.field.axis_profile().into_iter().map(|(_, v)| v).collect();
    let out = serde_json::json!({
        "axis": axis,
        "steps": g.steps,
        "radius": radius,
        "next_term_mass": g.next_term_mass,
        "next_term_sup": g.next_term_sup,
        "origin_tail_estimate": g.origin_tail_estimate,
        "renewal_residual": residual,
    });
    to_py(py, &out)
}

/// Exact one-arm probability of the BRW on `Q_r` by fixed-point iteration.
#[pyfunction]
#[pyo3(signature = (offspring, kernel, r, window = None, tol = 1e-12))]
fn brw_one_arm_oracle(
    py: Python<'_>,
    offspring: &PyOffspring,
    kernel: &PyKernel,
    r: i64,
    window: Option<i64>,
    tol: f64,
) -> PyResult<Py<PyAny>> {
    let (off, k) = (&offspring.inner, &kernel.inner);
    let o = py.detach(|| exact::brw_one_arm_oracle(off, k, r, window.unwrap_or(r + 1), tol)).map_err(err)?;
    to_py(py, &o)
}

/// `E|V(Q_r)|` and `E|V(Q_r)|^2` for the BRW killed outside `Q_window`.
#[pyfunction]
fn volume_moments(py: Python<'_>, kernel: &PyKernel, sigma_sq: f64, window: i64, depth: usize, r: i64) -> PyResult<Py<PyAny>> {
    let k = &kernel.inner;
    let o = py.detach(|| exact::three_point_sum(k, sigma_sq, window, depth, r)).map_err(err)?;
    to_py(py, &o)
}

/// Runs a job dict (same fields as the command line's JSON config).
#[pyfunction]
#[pyo3(signature = (config, workers = None))]
fn run_job(py: Python<'_>, config: &Bound<'_, PyAny>, workers: Option<usize>) -> PyResult<Py<PyAny>> {
    let cfg: JobConfig = from_py(config)?;
    let out = py.detach(|| job::run_job(&cfg, workers)).map_err(err)?;
    let fit = out.table.fit(analysis::MIN_FIT_HITS).ok();
    let result = serde_json::json!({
        "csv": out.table.to_csv(),
        "rows": out.table.rows,
        "p": out.p,
        "pc": out.pc,
        "fit": fit,
        "workers": out.workers,
    });
    to_py(py, &result)
}

#[pyfunction]
#[pyo3(signature = (kernel, window, n_grid, samples, seed, workers = None, bisection_steps = 12, bracket = None))]
#[allow(clippy::too_many_arguments)]
fn estimate_pc(
    py: Python<'_>,
    kernel: &PyKernel,
    window: i64,
    n_grid: Vec<u64>,
    samples: u64,
    seed: u64,
    workers: Option<usize>,
    bisection_steps: usize,
    bracket: Option<(f64, f64)>,
) -> PyResult<Py<PyAny>> {
    let workers = resolve_workers(workers).map_err(err)?;
    let pc_job = PcJob { window, n_grid, samples, seed, workers, bisection_steps, bracket };
    let k = &kernel.inner;
    let est = py.detach(|| lrp::estimate_pc(k, &pc_job)).map_err(err)?;
    to_py(py, &est)
}

/// Percolation cluster of the origin in `Q_window`, sample `index` of stream `seed`.
#[pyfunction]
#[pyo3(signature = (kernel, p, window, seed, index = 0, vertex_cap = 1_000_000))]
fn cluster(py: Python<'_>, kernel: &PyKernel, p: f64, window: i64, seed: u64, index: u64, vertex_cap: usize) -> PyResult<Py<PyAny>> {
    let cfg = PercolationConfig::new(kernel.inner.clone(), p, window).map_err(err)?;
    let origin = vec![0; kernel.inner.dim()];
    let c = py.detach(|| lrp::explore_cluster(&cfg, &origin, vertex_cap, &mut stream(seed, index))).map_err(err)?;
    let vertices: Vec<&[i64]> = c.vertices.iter().map(|v| v.coords()).collect();
    let out = serde_json::json!({
        "vertices": vertices,
        "edges": c.edges,
        "complete": c.complete(),
        "hit_window_boundary": c.hit_window_boundary,
        "max_norm": c.max_norm(),
        "decisions": c.decisions,
    });
    to_py(py, &out)
}

/// Exact probability of `event` on a small graph.
#[pyfunction]
fn enumerate(graph: &Bound<'_, PyAny>, event: &Bound<'_, PyAny>) -> PyResult<f64> {
    let g: TinyGraph = from_py(graph)?;
    let e: EventSpec = from_py(event)?;
    exact::enumerate(&g, &e).map_err(err)
}

/// `P(A o B)` and `P(A) P(B)` for increasing events.
#[pyfunction]
fn bk_check(py: Python<'_>, graph: &Bound<'_, PyAny>, a: &Bound<'_, PyAny>, b: &Bound<'_, PyAny>) -> PyResult<Py<PyAny>> {
    let g: TinyGraph = from_py(graph)?;
    let r = exact::bk_check(&g, &from_py(a)?, &from_py(b)?).map_err(err)?;
    to_py(py, &r)
}

#[pymodule]
fn longarm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyKernel>()?;
    m.add_class::<PyOffspring>()?;
    m.add_function(wrap_pyfunction!(exponents, m)?)?;
    m.add_function(wrap_pyfunction!(beta_constraints_hold, m)?)?;
    m.add_function(wrap_pyfunction!(wilson_ci, m)?)?;
    m.add_function(wrap_pyfunction!(loglog_fit, m)?)?;
    m.add_function(wrap_pyfunction!(green_function, m)?)?;
    m.add_function(wrap_pyfunction!(brw_one_arm_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(volume_moments, m)?)?;
    m.add_function(wrap_pyfunction!(run_job, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_pc, m)?)?;
    m.add_function(wrap_pyfunction!(cluster, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate, m)?)?;
    m.add_function(wrap_pyfunction!(bk_check, m)?)?;
    Ok(())
}
