//! Python bindings: coefficients, thresholds, single hitting estimates and
//! the full command runner.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use levy_loewner::calculus;
use levy_loewner::experiments::{hitting_probability as estimate, McSettings, PhaseParams};
use levy_loewner::io::config::parse_config;
use levy_loewner::io::run::execute;
use levy_loewner::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Numerical(_) | Error::Statistical(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Round-trips a JSON value into Python objects through the json module.
fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

fn py_to_json(py: Python<'_>, obj: &Bound<'_, PyAny>) -> PyResult<serde_json::Value> {
    let text: String = py.import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyfunction]
#[pyo3(signature = (alpha, p, tol = 1e-10))]
fn gamma_coeff(alpha: f64, p: f64, tol: f64) -> PyResult<f64> {
    calculus::gamma_coeff(alpha, p, tol).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (alpha, p, tol = 1e-10))]
fn gamma_coeff_alt(alpha: f64, p: f64, tol: f64) -> PyResult<f64> {
    calculus::gamma_coeff_alt(alpha, p, tol).map_err(to_py)
}

#[pyfunction]
fn frac_constant(alpha: f64) -> PyResult<f64> {
    calculus::frac_constant(alpha).map_err(to_py)
}

#[pyfunction]
fn classify_power(alpha: f64, p: f64) -> PyResult<&'static str> {
    calculus::classify_power(alpha, p).map(|c| c.as_str()).map_err(to_py)
}

#[pyfunction]
fn theta0(alpha: f64) -> PyResult<f64> {
    calculus::theta0(alpha).map_err(to_py)
}

#[pyfunction]
fn phi(alpha: f64, p: f64) -> PyResult<f64> {
    calculus::phi(alpha, p).map_err(to_py)
}

/// Estimate of `P(zeta(z) <= horizon)` as a dict.
#[pyfunction]
#[pyo3(signature = (kappa, alpha, theta, z, n, horizon, seed = 1, beta = 2.0))]
#[allow(clippy::too_many_arguments)]
fn hitting_probability<'py>(
    py: Python<'py>,
    kappa: f64,
    alpha: f64,
    theta: f64,
    z: Complex64,
    n: usize,
    horizon: f64,
    seed: u64,
    beta: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let params = PhaseParams::new(kappa, alpha, theta, z).with_beta(beta);
    let e = py.detach(|| estimate(&params, &McSettings::new(n, horizon, seed))).map_err(to_py)?;
    json_to_py(py, &serde_json::to_value(&e).map_err(|e| PyRuntimeError::new_err(e.to_string()))?)
}

/// Runs a CLI command in memory and returns `{file name: text}`.
#[pyfunction]
#[pyo3(signature = (command, params = None, seed = 1, workers = 1))]
fn run<'py>(
    py: Python<'py>,
    command: &str,
    params: Option<&Bound<'py, PyAny>>,
    seed: u64,
    workers: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let params = match params {
        Some(p) => py_to_json(py, p)?,
        None => serde_json::json!({}),
    };
    let flags = serde_json::json!({"seed": seed, "workers": workers, "command": {"params": params}});
    let cfg = parse_config(None, command, flags).map_err(to_py)?;
    let out = py.detach(|| execute(&cfg)).map_err(to_py)?;
    let files: serde_json::Map<String, serde_json::Value> = out
        .names()
        .map(|name| (name.to_string(), String::from_utf8_lossy(out.get(name).unwrap()).into_owned().into()))
        .collect();
    json_to_py(py, &serde_json::Value::Object(files))
}

#[pymodule]
fn levy_loewner_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(gamma_coeff, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_coeff_alt, m)?)?;
    m.add_function(wrap_pyfunction!(frac_constant, m)?)?;
    m.add_function(wrap_pyfunction!(classify_power, m)?)?;
    m.add_function(wrap_pyfunction!(theta0, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(hitting_probability, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
