//! Python bindings. Fields cross the boundary as nested lists of nodal
//! values indexed `[x][y]`.

use hydrolim::discretization::snapshot::read_snapshot;
use hydrolim::harness::{self, RunConfig, VerifyLevel};
use hydrolim::{HydroError, SpectralField};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use std::fs::File;
use std::path::PathBuf;

fn py_err(e: HydroError) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn config_from(toml: Option<&str>) -> PyResult<RunConfig> {
    toml.map_or_else(|| Ok(RunConfig::default()), RunConfig::from_toml).map_err(py_err)
}

type Nodal = Vec<Vec<f64>>;
type CheckRow = (String, String, f64, f64, bool);

fn nodal(field: &SpectralField) -> Nodal {
    field.to_nodal().outer_iter().map(|row| row.to_vec()).collect()
}

/// Default configuration as TOML text.
#[pyfunction]
fn default_config() -> String {
    RunConfig::default().to_toml()
}

/// Grid nodes `(x, y)` for an `nx` by `ny` grid.
#[pyfunction]
fn grid_nodes(nx: usize, ny: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let grid = hydrolim::Grid::new(hydrolim::GridSpec::new(nx, ny)).map_err(py_err)?;
    Ok((grid.x(), grid.y().to_vec()))
}

/// Generate the initial data into `out`; returns `(u0, v0, report_json)`.
#[pyfunction]
#[pyo3(signature = (out, config=None))]
fn gen_data(out: PathBuf, config: Option<&str>) -> PyResult<(Nodal, Nodal, String)> {
    let config = config_from(config)?;
    let data = harness::gen_data(&config, &out).map_err(py_err)?;
    let report = serde_json::to_string(&data.report).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((nodal(&data.u0), nodal(&data.v0), report))
}

/// Full sweep into `out`; returns one `(epsilon, L2_error, Linf_error,
/// bootstrap_ratio)` tuple per sweep point.
#[pyfunction]
#[pyo3(signature = (out, config=None, threads=None))]
fn run(py: Python<'_>, out: PathBuf, config: Option<&str>, threads: Option<usize>) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    let config = config_from(config)?;
    let threads = threads.unwrap_or_else(harness::worker_count);
    let summary = py.detach(|| harness::run(&config, &out, threads)).map_err(py_err)?;
    Ok(summary
        .reports
        .iter()
        .map(|r| (r.epsilon, r.l2_error, r.linf_error, r.bootstrap_ratio))
        .collect())
}

/// Log-log least-squares slopes; returns `(L2_slope, Linf_slope, passed)`.
#[pyfunction]
fn fit_rate(epsilons: Vec<f64>, l2: Vec<f64>, linf: Vec<f64>) -> PyResult<(f64, f64, bool)> {
    let fit = harness::fit_errors(&epsilons, &l2, &linf).map_err(py_err)?;
    Ok((fit.l2.slope, fit.linf.slope, fit.passed))
}

/// Read an HLIM1 snapshot; returns `(values, t)`.
#[pyfunction]
fn load_snapshot(path: PathBuf) -> PyResult<(Nodal, f64)> {
    let file = File::open(&path).map_err(|e| PyValueError::new_err(format!("{}: {e}", path.display())))?;
    let (field, t) = read_snapshot(file, None).map_err(py_err)?;
    Ok((nodal(&field), t))
}

/// Verification suite; returns `(passed, [(module, name, value, tolerance, passed)])`.
#[pyfunction]
#[pyo3(signature = (level="quick", seed=20240531))]
fn verify(py: Python<'_>, level: &str, seed: u64) -> PyResult<(bool, Vec<CheckRow>)> {
    let level: VerifyLevel = level.parse().map_err(py_err)?;
    let report = py.detach(|| harness::verify(level, seed)).map_err(py_err)?;
    let checks = report
        .checks
        .into_iter()
        .map(|c| (c.module, c.name, c.value, c.tolerance, c.passed))
        .collect();
    Ok((report.passed, checks))
}

#[pymodule]
fn hydrolim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(grid_nodes, m)?)?;
    m.add_function(wrap_pyfunction!(gen_data, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(fit_rate, m)?)?;
    m.add_function(wrap_pyfunction!(load_snapshot, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
