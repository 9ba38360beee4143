//! Python module `rdcbf`: distance queries, the safety-filter QP and
//! scenario simulation. Results come back as plain dicts and lists.

use nalgebra::Vector3;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use rdcbf_core::geometry::{oracle, segment_rect_sqdist, segment_segment_sqdist, DistResult, Rect3, Segment3};
use rdcbf_core::qp::{solve, QpProblem, QpRow};
use rdcbf_core::robot::StateVector;
use rdcbf_core::safety::Mode;
use rdcbf_core::sim::{monte_carlo, run, RunOverrides, Scenario, SimError};

type P3 = [f64; 3];

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn sim_error(e: SimError) -> PyErr {
    if e.is_config() {
        value_error(e)
    } else {
        PyOSError::new_err(e.to_string())
    }
}

/// Serializes through JSON so nested records arrive as builtin types.
fn to_python<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_error)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn dist_tuple(r: DistResult) -> (f64, P3, P3) {
    (r.d2, r.witness_a.into(), r.witness_b.into())
}

fn mode(name: &str) -> PyResult<Mode> {
    name.parse().map_err(value_error)
}

/// Squared distance between segments `a0a1` and `b0b1`, with witness points.
#[pyfunction]
fn segment_segment(a0: P3, a1: P3, b0: P3, b1: P3) -> (f64, P3, P3) {
    let a = Segment3::new(Vector3::from(a0), Vector3::from(a1));
    let b = Segment3::new(Vector3::from(b0), Vector3::from(b1));
    dist_tuple(segment_segment_sqdist(&a, &b))
}

/// Squared distance between segment `p0p1` and the rectangle with the given
/// corners in cyclic order, with witness points.
#[pyfunction]
fn segment_rect(p0: P3, p1: P3, corners: [P3; 4]) -> PyResult<(f64, P3, P3)> {
    let rect = Rect3::new(corners.map(Vector3::from)).map_err(value_error)?;
    let s = Segment3::new(Vector3::from(p0), Vector3::from(p1));
    Ok(dist_tuple(segment_rect_sqdist(&s, &rect)))
}

/// `min ½‖u − u_nom‖²` subject to `a·u ≥ b` for each `(a, b)` in `rows` and
/// `|u_i| ≤ limits_i`. Returns `(u, status)`.
#[pyfunction]
fn filter_qp(u_nom: [f64; 8], rows: Vec<([f64; 8], f64)>, limits: [f64; 8]) -> PyResult<([f64; 8], String)> {
    let rows = rows.into_iter().map(|(a, b)| QpRow { a: StateVector::from(a), b }).collect();
    let p = QpProblem::with_limits(StateVector::from(u_nom), rows, &StateVector::from(limits)).map_err(value_error)?;
    let sol = solve(&p);
    Ok((sol.u.into(), format!("{:?}", sol.status).to_lowercase()))
}

/// Exact queries against the brute-force reference on `n` random instances.
#[pyfunction]
#[pyo3(signature = (n = 10_000, seed = 0))]
fn fuzz_geometry<'py>(py: Python<'py>, n: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let report = py.detach(|| oracle::fuzz(n, seed));
    to_python(py, &report)
}

fn overrides(seed: Option<u64>, activation_h: Option<f64>, disturbance: Option<bool>) -> RunOverrides {
    RunOverrides { seed, activation_h, disturbance, ..RunOverrides::default() }
}

/// One closed-loop run of a scenario file; returns the summary dict.
#[pyfunction]
#[pyo3(signature = (scenario, mode = "rdcbf", seed = None, activation_h = None, disturbance = None))]
fn run_scenario<'py>(
    py: Python<'py>,
    scenario: &str,
    mode: &str,
    seed: Option<u64>,
    activation_h: Option<f64>,
    disturbance: Option<bool>,
) -> PyResult<Bound<'py, PyAny>> {
    let sc = Scenario::from_path(scenario).map_err(sim_error)?;
    let m = self::mode(mode)?;
    let o = overrides(seed, activation_h, disturbance);
    let record = py.detach(|| run(&sc, m, &o)).map_err(sim_error)?;
    to_python(py, &record.summary)
}

/// Monte-Carlo batch over `runs` seeds per mode; returns the per-mode aggregates.
#[pyfunction]
#[pyo3(name = "bench", signature = (scenario, modes = vec!["dcbf".to_string(), "r1cbf".to_string(), "r2cbf".to_string(), "rdcbf".to_string()], runs = 50, seed = None, jobs = 0))]
fn run_bench<'py>(
    py: Python<'py>,
    scenario: &str,
    modes: Vec<String>,
    runs: usize,
    seed: Option<u64>,
    jobs: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let sc = Scenario::from_path(scenario).map_err(sim_error)?;
    let modes = modes.iter().map(|m| mode(m)).collect::<PyResult<Vec<_>>>()?;
    let o = overrides(seed, None, None);
    let result = py.detach(|| monte_carlo(&sc, &modes, runs, &o, jobs)).map_err(sim_error)?;
    to_python(py, &result.aggregates)
}

#[pymodule]
fn rdcbf(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(segment_segment, m)?)?;
    m.add_function(wrap_pyfunction!(segment_rect, m)?)?;
    m.add_function(wrap_pyfunction!(filter_qp, m)?)?;
    m.add_function(wrap_pyfunction!(fuzz_geometry, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(run_bench, m)?)?;
    Ok(())
}
