//! Python bindings. Errors from the core crate surface as `ValueError`.

// the pyo3 0.22 function macros trip this lint on every `PyResult` return
#![allow(clippy::useless_conversion)]

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{IntoPyDict, PyDict};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qutrit_chain::analysis;
use qutrit_chain::protocols::{self, Chain, ProtocolSpec};
use qutrit_chain::qutrit::{self, ChannelCoeffs, PureState};

fn err(e: qutrit_chain::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Normalized pure state of one or more qutrits.
#[pyclass(name = "State", module = "qutrit_chain", frozen)]
#[derive(Clone)]
struct PyState(PureState);

#[pymethods]
impl PyState {
    /// Builds a state from `3**n` complex amplitudes; the input is normalized.
    #[new]
    fn new(amplitudes: Vec<Complex64>) -> PyResult<Self> {
        let len = amplitudes.len();
        let n = (0..=12)
            .find(|&k| qutrit::dim(k) == len)
            .ok_or_else(|| PyValueError::new_err(format!("length {len} is not a power of 3")))?;
        PureState::from_amplitudes(n, amplitudes)
            .and_then(|s| s.normalized())
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn n_qutrits(&self) -> usize {
        self.0.n_qutrits()
    }

    #[getter]
    fn amplitudes(&self) -> Vec<Complex64> {
        self.0.amplitudes().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.amplitudes().len()
    }

    fn __repr__(&self) -> String {
        format!("State({})", self.0)
    }
}

/// Schmidt coefficients `a0 <= a1 <= a2` of the shared channel.
#[pyclass(name = "Channel", module = "qutrit_chain", frozen)]
#[derive(Clone, Copy)]
struct PyChannel(ChannelCoeffs);

#[pymethods]
impl PyChannel {
    #[new]
    fn new(a0: f64, a1: f64, a2: f64) -> PyResult<Self> {
        qutrit::make_channel(a0, a1, a2).map(Self).map_err(err)
    }

    /// Channel on the `"min"` or `"max"` envelope for the given `a0`.
    #[staticmethod]
    fn envelope(a0: f64, which: &str) -> PyResult<Self> {
        let env = which.parse().map_err(err)?;
        analysis::envelope_channel(a0, env).map(Self).map_err(err)
    }

    #[staticmethod]
    fn maximally_entangled() -> Self {
        Self(ChannelCoeffs::maximally_entangled())
    }

    #[getter]
    fn a0(&self) -> f64 {
        self.0.a0()
    }

    #[getter]
    fn a1(&self) -> f64 {
        self.0.a1()
    }

    #[getter]
    fn a2(&self) -> f64 {
        self.0.a2()
    }

    fn __repr__(&self) -> String {
        format!("Channel({}, {}, {})", self.0.a0(), self.0.a1(), self.0.a2())
    }
}

#[pyclass(name = "Protocol", module = "qutrit_chain", frozen)]
#[derive(Clone, Copy)]
struct PyProtocol(ProtocolSpec);

#[pymethods]
impl PyProtocol {
    #[staticmethod]
    fn sctp(steps: usize) -> PyResult<Self> {
        ProtocolSpec::sctp(steps).map(Self).map_err(err)
    }

    #[staticmethod]
    fn gctp4() -> Self {
        Self(ProtocolSpec::gctp4())
    }

    #[staticmethod]
    fn pgctp(segments: usize) -> PyResult<Self> {
        ProtocolSpec::pgctp(segments).map(Self).map_err(err)
    }

    #[getter]
    fn kind(&self) -> String {
        self.0.kind().to_string()
    }

    #[getter]
    fn hops(&self) -> usize {
        self.0.hops()
    }

    #[getter]
    fn segments(&self) -> usize {
        self.0.segments()
    }

    fn __repr__(&self) -> String {
        format!("Protocol.{}", self.0)
    }
}

#[pyfunction]
fn make_state(alpha: Complex64, beta: Complex64, gamma: Complex64) -> PyResult<PyState> {
    qutrit::make_state(alpha, beta, gamma)
        .map(PyState)
        .map_err(err)
}

#[pyfunction]
fn make_channel(a0: f64, a1: f64, a2: f64) -> PyResult<PyChannel> {
    PyChannel::new(a0, a1, a2)
}

#[pyfunction]
fn haar_random_state(seed: u64) -> PyState {
    PyState(qutrit::haar_random_state(seed))
}

#[pyfunction]
fn tensor(s1: &PyState, s2: &PyState) -> PyState {
    PyState(qutrit::tensor(&s1.0, &s2.0))
}

#[pyfunction]
fn fidelity(s1: &PyState, s2: &PyState) -> PyResult<f64> {
    qutrit::fidelity(&s1.0, &s2.0).map_err(err)
}

/// One trial, seeded; returns a dict with `success`, `fidelity`, `final_state`, `messages`, `classes`.
#[pyfunction]
fn run<'py>(
    py: Python<'py>,
    protocol: &PyProtocol,
    channel: &PyChannel,
    state: &PyState,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = Chain::new(channel.0)
        .run(&protocol.0, &state.0, &mut rng)
        .map_err(err)?;
    let d = PyDict::new_bound(py);
    d.set_item("success", r.success)?;
    d.set_item("fidelity", r.fidelity)?;
    d.set_item(
        "final_state",
        r.final_state.map(|s| Py::new(py, PyState(s))).transpose()?,
    )?;
    let messages: Vec<(usize, u8, u8)> = r
        .message_log
        .iter()
        .map(|m| (m.hop_index, m.outcome.m(), m.outcome.n()))
        .collect();
    d.set_item("messages", messages)?;
    let classes: Vec<u8> = r.recovery_classes.iter().map(|c| c.index()).collect();
    d.set_item("classes", classes)?;
    Ok(d)
}

/// Monte Carlo over `trials` independent runs.
#[pyfunction]
fn simulate<'py>(
    py: Python<'py>,
    protocol: &PyProtocol,
    channel: &PyChannel,
    state: &PyState,
    trials: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let chain = Chain::new(channel.0);
    let r = py
        .allow_threads(|| protocols::simulate(&chain, &protocol.0, &state.0, trials, seed))
        .map_err(err)?;
    let d = PyDict::new_bound(py);
    d.set_item("trials", r.trials)?;
    d.set_item("successes", r.successes)?;
    d.set_item("frequency", r.frequency)?;
    d.set_item("mean_fidelity", r.mean_fidelity)?;
    d.set_item("min_fidelity", r.min_fidelity)?;
    let counts: Vec<(u8, usize)> = r
        .class_counts
        .iter()
        .map(|(c, n)| (c.index(), *n))
        .collect();
    d.set_item("class_counts", counts.into_py_dict_bound(py))?;
    Ok(d)
}

#[pyfunction]
fn exact_success_probability(
    protocol: &PyProtocol,
    channel: &PyChannel,
    state: &PyState,
) -> PyResult<f64> {
    Chain::new(channel.0)
        .exact_success_probability(&protocol.0, &state.0)
        .map_err(err)
}

/// Exact enumeration; returns total probabilities and per-class masses of the first segment.
#[pyfunction]
fn enumerate<'py>(
    py: Python<'py>,
    protocol: &PyProtocol,
    channel: &PyChannel,
    state: &PyState,
) -> PyResult<Bound<'py, PyDict>> {
    let dist = protocols::enumerate(&protocol.0, &state.0, &channel.0).map_err(err)?;
    let d = PyDict::new_bound(py);
    d.set_item("branches", dist.entries.len())?;
    d.set_item("total_probability", dist.total_probability())?;
    d.set_item("total_success_probability", dist.total_success_probability)?;
    let classes: Vec<(u8, f64)> = dist
        .class_probabilities(0)
        .iter()
        .map(|(c, p)| (c.index(), *p))
        .collect();
    d.set_item("class_probabilities", classes.into_py_dict_bound(py))?;
    Ok(d)
}

#[pyfunction]
fn p_single(channel: &PyChannel) -> f64 {
    analysis::p_single(&channel.0)
}

#[pyfunction]
fn p_sctp(channel: &PyChannel, steps: usize) -> f64 {
    analysis::p_sctp(&channel.0, steps)
}

#[pyfunction]
fn p_gctp4(channel: &PyChannel) -> f64 {
    analysis::p_gctp4(&channel.0)
}

#[pyfunction]
fn p_gctp4_min(a0: f64) -> PyResult<f64> {
    analysis::p_gctp4_min(a0).map_err(err)
}

#[pyfunction]
fn p_gctp4_max(a0: f64) -> PyResult<f64> {
    analysis::p_gctp4_max(a0).map_err(err)
}

#[pyfunction]
fn p_pgctp(channel: &PyChannel, segments: usize) -> f64 {
    analysis::p_pgctp(&channel.0, segments)
}

/// Sweep rows as `(a0, envelope, n_segments, p_s, p_pg, ratio)` tuples.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn sweep(
    n_segments: usize,
    a0_grid: Vec<f64>,
) -> PyResult<Vec<(f64, String, usize, f64, f64, Option<f64>)>> {
    Ok(analysis::sweep(n_segments, &a0_grid)
        .map_err(err)?
        .into_iter()
        .map(|p| {
            (
                p.a0,
                p.envelope.to_string(),
                p.n_segments,
                p.p_s,
                p.p_pg,
                p.ratio,
            )
        })
        .collect())
}

#[pymodule]
#[pyo3(name = "qutrit_chain")]
fn qutrit_chain_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyState>()?;
    m.add_class::<PyChannel>()?;
    m.add_class::<PyProtocol>()?;
    m.add_function(wrap_pyfunction!(make_state, m)?)?;
    m.add_function(wrap_pyfunction!(make_channel, m)?)?;
    m.add_function(wrap_pyfunction!(haar_random_state, m)?)?;
    m.add_function(wrap_pyfunction!(tensor, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(exact_success_probability, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate, m)?)?;
    m.add_function(wrap_pyfunction!(p_single, m)?)?;
    m.add_function(wrap_pyfunction!(p_sctp, m)?)?;
    m.add_function(wrap_pyfunction!(p_gctp4, m)?)?;
    m.add_function(wrap_pyfunction!(p_gctp4_min, m)?)?;
    m.add_function(wrap_pyfunction!(p_gctp4_max, m)?)?;
    m.add_function(wrap_pyfunction!(p_pgctp, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
