//! Python bindings for `ssd_core`.

use pyo3::exceptions::{PyIOError, PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ssd_core::analyzer;
use ssd_core::model::MaskedModel;
use ssd_core::ssd::RoundStats;
use ssd_core::{DecodeTrace, Error, TreeShape};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        Error::FixtureMiss(tokens) => PyKeyError::new_err(format!("no fixture entry for state {tokens:?}")),
        Error::LosslessnessViolation(msg) => PyRuntimeError::new_err(msg),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait IntoPyResult<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPyResult<T> for ssd_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

#[pyclass(name = "SequenceState", module = "ssd_py", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PySequenceState(ssd_core::SequenceState);

#[pymethods]
impl PySequenceState {
    #[new]
    #[pyo3(signature = (prompt, gen_len, mask_id, block_len))]
    fn new(prompt: Vec<u32>, gen_len: usize, mask_id: u32, block_len: usize) -> PyResult<Self> {
        ssd_core::SequenceState::new(&prompt, gen_len, mask_id, block_len).py().map(Self)
    }

    #[staticmethod]
    fn from_line(line: &str) -> PyResult<Self> {
        ssd_core::SequenceState::from_line(line).py().map(Self)
    }

    fn to_line(&self) -> String {
        self.0.to_line()
    }

    #[getter]
    fn tokens(&self) -> Vec<u32> {
        self.0.tokens().to_vec()
    }

    #[getter]
    fn generated(&self) -> Vec<u32> {
        self.0.generated().to_vec()
    }

    #[getter]
    fn prompt_len(&self) -> usize {
        self.0.prompt_len()
    }

    #[getter]
    fn gen_len(&self) -> usize {
        self.0.gen_len()
    }

    #[getter]
    fn mask_id(&self) -> u32 {
        self.0.mask_id()
    }

    #[getter]
    fn block_len(&self) -> usize {
        self.0.block_len()
    }

    #[getter]
    fn mask_count(&self) -> usize {
        self.0.mask_count()
    }

    fn is_masked(&self, pos: usize) -> bool {
        self.0.is_masked(pos)
    }

    fn masked_positions(&self) -> Vec<usize> {
        self.0.masked_positions().collect()
    }

    fn current_block(&self) -> Option<usize> {
        self.0.current_block()
    }

    /// Half-open `(start, end)` ranges of each block.
    fn schedule(&self) -> Vec<(usize, usize)> {
        self.0.schedule().blocks().iter().map(|r| (r.start, r.end)).collect()
    }

    fn place_token(&self, pos: usize, token: u32) -> PyResult<Self> {
        self.0.place_token(pos, token).py().map(Self)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "SequenceState(prompt_len={}, gen_len={}, masks={}, block_len={})",
            self.0.prompt_len(),
            self.0.gen_len(),
            self.0.mask_count(),
            self.0.block_len()
        )
    }
}

#[pyclass(name = "SynthModel", module = "ssd_py", frozen)]
struct PySynthModel(ssd_core::SynthModel);

#[pymethods]
impl PySynthModel {
    #[new]
    #[pyo3(signature = (seed = 0, vocab_size = 32, sharpness = 4.0, context_window = 2))]
    fn new(seed: u64, vocab_size: usize, sharpness: f64, context_window: usize) -> PyResult<Self> {
        let config = ssd_core::SynthModelConfig {
            seed,
            vocab_size,
            sharpness,
            context_window,
        };
        ssd_core::SynthModel::new(config).py().map(Self)
    }

    #[getter]
    fn vocab_size(&self) -> usize {
        self.0.vocab_size()
    }

    /// Logit rows for every position of `state`.
    fn forward(&self, state: &PySequenceState) -> PyResult<Vec<Vec<f64>>> {
        forward_rows(&self.0, state)
    }

    fn __repr__(&self) -> String {
        let c = self.0.config();
        format!(
            "SynthModel(seed={}, vocab_size={}, sharpness={}, context_window={})",
            c.seed, c.vocab_size, c.sharpness, c.context_window
        )
    }
}

#[pyclass(name = "TableModel", module = "ssd_py", frozen)]
struct PyTableModel(ssd_core::TableModel);

#[pymethods]
impl PyTableModel {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        ssd_core::TableModel::parse(text).py().map(Self)
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        ssd_core::TableModel::load(path).py().map(Self)
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    #[getter]
    fn vocab_size(&self) -> usize {
        self.0.vocab_size()
    }

    fn forward(&self, state: &PySequenceState) -> PyResult<Vec<Vec<f64>>> {
        forward_rows(&self.0, state)
    }

    fn __len__(&self) -> usize {
        self.0.entries().len()
    }
}

fn forward_rows(model: &dyn MaskedModel, state: &PySequenceState) -> PyResult<Vec<Vec<f64>>> {
    let batch = model.forward(std::slice::from_ref(&state.0)).py()?;
    Ok(batch[0].rows().map(<[f64]>::to_vec).collect())
}

#[derive(FromPyObject)]
enum AnyModel<'py> {
    Synth(PyRef<'py, PySynthModel>),
    Table(PyRef<'py, PyTableModel>),
}

impl AnyModel<'_> {
    fn get(&self) -> &dyn MaskedModel {
        match self {
            AnyModel::Synth(m) => &m.0,
            AnyModel::Table(m) => &m.0,
        }
    }
}

#[pyclass(name = "Trace", module = "ssd_py", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyTrace(DecodeTrace);

#[pymethods]
impl PyTrace {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        DecodeTrace::parse(text).py().map(Self)
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        DecodeTrace::load(path).py().map(Self)
    }

    fn to_lines(&self) -> String {
        self.0.to_lines()
    }

    #[getter]
    fn topk(&self) -> usize {
        self.0.header.topk
    }

    /// `(position, token, confidence)` per decoding step.
    fn steps(&self) -> Vec<(usize, u32, f64)> {
        self.0.steps.iter().map(|s| (s.position, s.token, s.confidence)).collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(name = "Round", module = "ssd_py", frozen, get_all)]
struct PyRound {
    iteration: usize,
    batch_size: usize,
    accepted: usize,
    forwards: usize,
    fallback: bool,
}

impl From<&RoundStats> for PyRound {
    fn from(r: &RoundStats) -> Self {
        Self {
            iteration: r.iteration,
            batch_size: r.batch_size,
            accepted: r.accepted,
            forwards: r.forwards,
            fallback: r.fallback,
        }
    }
}

#[pymethods]
impl PyRound {
    fn __repr__(&self) -> String {
        format!(
            "Round(iteration={}, batch_size={}, accepted={}, forwards={}, fallback={})",
            self.iteration,
            self.batch_size,
            self.accepted,
            self.forwards,
            if self.fallback { "True" } else { "False" }
        )
    }
}

#[pyclass(name = "DecodeResult", module = "ssd_py", frozen, get_all)]
struct PyDecodeResult {
    state: PySequenceState,
    trace: PyTrace,
    forwards: usize,
    rounds: Vec<Py<PyRound>>,
}

#[pymethods]
impl PyDecodeResult {
    #[getter]
    fn tokens(&self) -> Vec<u32> {
        self.state.0.generated().to_vec()
    }
}

#[pyfunction]
#[pyo3(signature = (model, state, topk = 5))]
fn stepwise_decode(model: AnyModel<'_>, state: &PySequenceState, topk: usize) -> PyResult<PyDecodeResult> {
    let out = ssd_core::stepwise_decode(model.get(), &state.0, topk).py()?;
    Ok(PyDecodeResult {
        state: PySequenceState(out.state),
        trace: PyTrace(out.trace),
        forwards: out.forwards,
        rounds: Vec::new(),
    })
}

/// `shape` is `"greedy"`, `"mix_order"` or `"kary{k}"`.
#[pyfunction]
#[pyo3(signature = (model, state, draft_len = 3, shape = "greedy", topk = 5))]
fn ssd_decode(
    py: Python<'_>,
    model: AnyModel<'_>,
    state: &PySequenceState,
    draft_len: usize,
    shape: &str,
    topk: usize,
) -> PyResult<PyDecodeResult> {
    let shape: TreeShape = shape.parse().py()?;
    let out = ssd_core::ssd_decode(model.get(), &state.0, draft_len, shape, topk).py()?;
    let rounds = out
        .rounds
        .iter()
        .map(|r| Py::new(py, PyRound::from(r)))
        .collect::<PyResult<_>>()?;
    Ok(PyDecodeResult {
        state: PySequenceState(out.state),
        trace: PyTrace(out.trace),
        forwards: out.forwards,
        rounds,
    })
}

#[pyfunction]
fn block_partition(prompt_len: usize, gen_len: usize, block_len: usize) -> PyResult<Vec<(usize, usize)>> {
    let schedule = ssd_core::block_partition(prompt_len, gen_len, block_len).py()?;
    Ok(schedule.blocks().iter().map(|r| (r.start, r.end)).collect())
}

#[pyfunction]
fn upper_bound(draft_len: usize) -> PyResult<f64> {
    analyzer::upper_bound(draft_len).py()
}

#[pyfunction]
fn kary_tree_size(k: usize, draft_len: usize) -> usize {
    analyzer::kary_tree_size(k, draft_len)
}

#[pyfunction]
fn topk_match_reduction(trace: &PyTrace, draft_len: usize, k: usize) -> PyResult<f64> {
    analyzer::topk_match_reduction(&trace.0, draft_len, k).py()
}

#[pymodule]
fn ssd_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySequenceState>()?;
    m.add_class::<PySynthModel>()?;
    m.add_class::<PyTableModel>()?;
    m.add_class::<PyTrace>()?;
    m.add_class::<PyRound>()?;
    m.add_class::<PyDecodeResult>()?;
    m.add_function(wrap_pyfunction!(stepwise_decode, m)?)?;
    m.add_function(wrap_pyfunction!(ssd_decode, m)?)?;
    m.add_function(wrap_pyfunction!(block_partition, m)?)?;
    m.add_function(wrap_pyfunction!(upper_bound, m)?)?;
    m.add_function(wrap_pyfunction!(kary_tree_size, m)?)?;
    m.add_function(wrap_pyfunction!(topk_match_reduction, m)?)?;
    Ok(())
}
