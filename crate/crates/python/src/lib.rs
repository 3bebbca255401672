//! Python bindings for `bec_sim`.
//!
//! Party inputs and transcripts cross the boundary as `"0101"` strings;
//! structured results come back as plain dicts and lists.

use bec_sim::capacity;
use bec_sim::reward_chain::{self, ChainParams};
use bec_sim::simulator::{self, SimConfig};
use bec_sim::{BitString, PartyInput};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

fn err(e: bec_sim::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn bits(s: &str) -> PyResult<PartyInput> {
    s.parse::<BitString>().map(PartyInput::new).map_err(err)
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_u64() {
            Some(u) => u.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
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

fn serialize<'py, T: serde::Serialize>(py: Python<'py>, x: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(x).map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &v)
}

/// A two-party protocol: which bit the speaker sends next, given its input
/// and the transcript so far.
#[pyclass(name = "ProtocolSpec", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyProtocolSpec {
    inner: bec_sim::ProtocolSpec,
}

#[pymethods]
impl PyProtocolSpec {
    /// Pseudorandom protocol of length `n0`, reproducible from `seed`.
    #[staticmethod]
    fn random(n0: usize, seed: u64) -> PyResult<Self> {
        bec_sim::make_random_spec(n0, seed)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn constant(n0: usize, bit: bool) -> PyResult<Self> {
        bec_sim::ProtocolSpec::constant(n0, bit)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        bec_sim::ProtocolSpec::from_json(text)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    #[getter]
    fn n0(&self) -> usize {
        self.inner.n0()
    }

    /// Noiseless transcript for inputs `x_a`, `x_b`.
    fn reference_transcript(&self, x_a: &str, x_b: &str) -> PyResult<String> {
        self.inner
            .reference_transcript(&bits(x_a)?, &bits(x_b)?)
            .map(|t| t.to_string())
            .map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("ProtocolSpec(n0={})", self.inner.n0())
    }
}

/// One simulated run over BEC(epsilon). Returns a dict with the two
/// outputs, success, total reward, final lengths and (optionally) the
/// per-round trace.
#[pyfunction]
#[pyo3(signature = (spec, x_a, x_b, rounds, epsilon, seed=0, monitors=true, trace=false))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    spec: &PyProtocolSpec,
    x_a: &str,
    x_b: &str,
    rounds: usize,
    epsilon: f64,
    seed: u64,
    monitors: bool,
    trace: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = SimConfig::new(
        spec.inner.clone(),
        bits(x_a)?,
        bits(x_b)?,
        rounds,
        epsilon,
        seed,
    )
    .with_monitors(monitors)
    .with_trace(trace);
    let r = py.detach(|| simulator::run(&cfg)).map_err(err)?;
    let records: Vec<Value> = r
        .trace
        .iter()
        .map(|rec| serde_json::from_str(&rec.to_json_line()).expect("trace line is JSON"))
        .collect();
    let v = serde_json::json!({
        "out_a": r.out_a.to_string(),
        "out_b": r.out_b.to_string(),
        "success": r.success,
        "total_reward": r.total_reward,
        "final_len_a": r.final_len_a,
        "final_len_b": r.final_len_b,
        "trace": records,
    });
    to_py(py, &v)
}

/// Exact failure probability by enumerating every round-erasure pattern
/// (at most 24 rounds).
#[pyfunction]
fn exact_error_prob(
    py: Python<'_>,
    spec: &PyProtocolSpec,
    x_a: &str,
    x_b: &str,
    rounds: usize,
    epsilon: f64,
) -> PyResult<f64> {
    let (a, b) = (bits(x_a)?, bits(x_b)?);
    py.detach(|| simulator::exact_error_prob(&spec.inner, &a, &b, rounds, epsilon))
        .map_err(err)
}

/// Monte-Carlo failure estimate: dict with trials, errors, estimate and
/// the 3-sigma half width.
#[pyfunction]
#[pyo3(signature = (spec, x_a, x_b, rounds, epsilon, trials, seed=0))]
#[allow(clippy::too_many_arguments)]
fn monte_carlo_error<'py>(
    py: Python<'py>,
    spec: &PyProtocolSpec,
    x_a: &str,
    x_b: &str,
    rounds: usize,
    epsilon: f64,
    trials: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = SimConfig::new(
        spec.inner.clone(),
        bits(x_a)?,
        bits(x_b)?,
        rounds,
        epsilon,
        seed,
    )
    .with_monitors(false)
    .with_trace(false);
    let est = py
        .detach(|| simulator::monte_carlo_error(&cfg, trials))
        .map_err(err)?;
    serialize(py, &est)
}

fn chain(p: f64) -> PyResult<ChainParams> {
    ChainParams::new(p).map_err(err)
}

#[pyfunction]
fn round_erasure_prob(epsilon: f64) -> PyResult<f64> {
    bec_sim::channel::round_erasure_prob(epsilon).map_err(err)
}

#[pyfunction]
fn expected_reward_recurrence(n: usize, p: f64) -> PyResult<f64> {
    Ok(reward_chain::expected_reward_recurrence(n, &chain(p)?))
}

#[pyfunction]
fn expected_reward_closed_form(n: usize, p: f64) -> PyResult<f64> {
    reward_chain::expected_reward_closed_form(n, &chain(p)?).map_err(err)
}

#[pyfunction]
fn expected_reward_dp(n: usize, p: f64) -> PyResult<f64> {
    Ok(reward_chain::expected_reward_dp(n, &chain(p)?))
}

/// Hitting-time table of the transition chain: dict with
/// `supported_states`, `expected_hits` and `hit_tr`.
#[pyfunction]
fn hitting_times(py: Python<'_>, p: f64) -> PyResult<Bound<'_, PyAny>> {
    let report = reward_chain::hitting_times(&chain(p)?).map_err(err)?;
    serialize(py, &report)
}

#[pyfunction]
fn min_k(epsilon: f64) -> PyResult<f64> {
    reward_chain::min_k(epsilon).map_err(err)
}

#[pyfunction]
fn error_upper_bound(n0: usize, k: f64, epsilon: f64, hit_tr: f64) -> PyResult<f64> {
    reward_chain::error_upper_bound(n0, k, epsilon, hit_tr).map_err(err)
}

#[pyfunction]
fn shannon_capacity(epsilon: f64) -> PyResult<f64> {
    capacity::shannon_capacity(epsilon).map_err(err)
}

#[pyfunction]
fn direct_lb(epsilon: f64) -> PyResult<f64> {
    capacity::direct_lb(epsilon).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (c=capacity::CAPACITY_RATIO_CONSTANT))]
fn direct_threshold(c: f64) -> f64 {
    capacity::direct_threshold(c)
}

/// All lower bounds at `epsilon` and the best of them, as a dict.
#[pyfunction]
#[pyo3(signature = (epsilon, eps_prime=capacity::DEFAULT_EPS_PRIME))]
fn best_lb(py: Python<'_>, epsilon: f64, eps_prime: f64) -> PyResult<Bound<'_, PyAny>> {
    let report = capacity::best_lb_with(epsilon, eps_prime).map_err(err)?;
    serialize(py, &report)
}

/// Randomized invariant suite; returns `{check: violations}`.
#[pyfunction]
#[pyo3(signature = (runs, seed=0))]
fn verify(py: Python<'_>, runs: u64, seed: u64) -> PyResult<Bound<'_, PyAny>> {
    let counts = py
        .detach(|| bec_sim::harness::verify_suite(runs, seed))
        .map_err(err)?;
    serialize(py, &counts.violations)
}

#[pymodule]
fn bec_sim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProtocolSpec>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(exact_error_prob, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo_error, m)?)?;
    m.add_function(wrap_pyfunction!(round_erasure_prob, m)?)?;
    m.add_function(wrap_pyfunction!(expected_reward_recurrence, m)?)?;
    m.add_function(wrap_pyfunction!(expected_reward_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(expected_reward_dp, m)?)?;
    m.add_function(wrap_pyfunction!(hitting_times, m)?)?;
    m.add_function(wrap_pyfunction!(min_k, m)?)?;
    m.add_function(wrap_pyfunction!(error_upper_bound, m)?)?;
    m.add_function(wrap_pyfunction!(shannon_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(direct_lb, m)?)?;
    m.add_function(wrap_pyfunction!(direct_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(best_lb, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add("CAPACITY_RATIO_CONSTANT", capacity::CAPACITY_RATIO_CONSTANT)?;
    m.add("DEFAULT_EPS_PRIME", capacity::DEFAULT_EPS_PRIME)?;
    Ok(())
}
