//! Python bindings for the `gawm` toolkit.
//!
//! Poses cross the boundary as [`Pose2`] objects or `(theta, x, y)` tuples,
//! increments as `(dx, dy, dtheta)` tuples. Reports come back as plain
//! dicts and lists.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

use gawm::config::ExperimentConfig;
use gawm::data::{generate_split, Dataset, Split};
use gawm::harness::{cmd_train, resolve_model};
use gawm::metrics::{run_gac, run_gar};
use gawm::models::rollout;
use gawm::se2::{state_distance, wrap_angle};
use gawm::segments::{make_compatibility_segment, make_identity_segment, make_inverse_segment};
use gawm::{ActionIncrement, ActionSegment, DirichletParams, DistanceParams, Error};

fn py_err(e: Error) -> PyErr {
    let msg = format!("{}: {e}", e.kind());
    match e {
        Error::Io { .. } | Error::MissingDataset(_) => PyIOError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

fn segment(actions: Vec<(f64, f64, f64)>) -> ActionSegment {
    actions
        .into_iter()
        .map(|(dx, dy, dt)| ActionIncrement::new(dx, dy, dt))
        .collect()
}

fn tuples(u: &ActionSegment) -> Vec<(f64, f64, f64)> {
    u.iter().map(|a| (a.dx, a.dy, a.dtheta)).collect()
}

/// Planar rigid pose: heading `theta` in (-pi, pi] and position `(x, y)`.
#[pyclass(frozen, from_py_object)]
#[derive(Clone, Copy)]
struct Pose2 {
    inner: gawm::Pose2,
}

#[pymethods]
impl Pose2 {
    #[new]
    #[pyo3(signature = (theta=0.0, x=0.0, y=0.0))]
    fn new(theta: f64, x: f64, y: f64) -> Self {
        Pose2 {
            inner: gawm::Pose2::new(theta, x, y),
        }
    }

    #[staticmethod]
    fn identity() -> Self {
        Pose2 {
            inner: gawm::Pose2::identity(),
        }
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta
    }

    #[getter]
    fn x(&self) -> f64 {
        self.inner.x
    }

    #[getter]
    fn y(&self) -> f64 {
        self.inner.y
    }

    fn compose(&self, other: &Pose2) -> Pose2 {
        Pose2 {
            inner: self.inner.compose(&other.inner),
        }
    }

    fn inverse(&self) -> Pose2 {
        Pose2 {
            inner: self.inner.inverse(),
        }
    }

    /// `|p1 - p2| + alpha_rot * |wrap(theta1 - theta2)|`.
    #[pyo3(signature = (other, alpha_rot=1.0))]
    fn distance(&self, other: &Pose2, alpha_rot: f64) -> PyResult<f64> {
        let params = DistanceParams::new(alpha_rot).map_err(py_err)?;
        Ok(state_distance(&self.inner, &other.inner, &params))
    }

    fn as_tuple(&self) -> (f64, f64, f64) {
        (self.inner.theta, self.inner.x, self.inner.y)
    }

    fn __mul__(&self, other: &Pose2) -> Pose2 {
        self.compose(other)
    }

    fn __repr__(&self) -> String {
        format!(
            "Pose2(theta={}, x={}, y={})",
            self.inner.theta, self.inner.x, self.inner.y
        )
    }
}

/// A reference simulator (`"exact"`, `"drift:0.1,0,0+noise:0.01"`, ...) or a
/// trained checkpoint (`"checkpoint:<path>"` or a `.json` path).
#[pyclass(frozen)]
struct WorldModel {
    inner: Box<dyn gawm::WorldModel>,
}

#[pymethods]
impl WorldModel {
    #[new]
    fn new(reference: &str) -> PyResult<Self> {
        Ok(WorldModel {
            inner: resolve_model(reference).map_err(py_err)?,
        })
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label()
    }

    #[getter]
    fn deterministic(&self) -> bool {
        self.inner.is_deterministic()
    }

    /// Poses `s_0 ... s_T` visited under `actions`.
    #[pyo3(signature = (start, actions, seed=0))]
    fn rollout(&self, start: &Pose2, actions: Vec<(f64, f64, f64)>, seed: u64) -> Vec<Pose2> {
        rollout(&self.inner, &start.inner, &segment(actions), seed)
            .poses
            .into_iter()
            .map(|p| Pose2 { inner: p })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("WorldModel({:?})", self.inner.label())
    }
}

/// Generated train or eval split.
#[pyclass(frozen, name = "Dataset")]
struct PyDataset {
    inner: Dataset,
}

#[pymethods]
impl PyDataset {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Poses of sequence `i`.
    fn poses(&self, i: usize) -> PyResult<Vec<Pose2>> {
        let seq = self
            .inner
            .sequences
            .get(i)
            .ok_or_else(|| PyValueError::new_err("sequence index out of range"))?;
        Ok(seq
            .trajectory
            .poses
            .iter()
            .map(|&p| Pose2 { inner: p })
            .collect())
    }

    /// Actions of sequence `i`.
    fn actions(&self, i: usize) -> PyResult<Vec<(f64, f64, f64)>> {
        let seq = self
            .inner
            .sequences
            .get(i)
            .ok_or_else(|| PyValueError::new_err("sequence index out of range"))?;
        Ok(tuples(&seq.actions))
    }
}

fn load_config(path: Option<PathBuf>) -> PyResult<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(&p).map_err(py_err),
        None => Ok(ExperimentConfig::default()),
    }
}

#[pyfunction]
fn wrap(theta: f64) -> f64 {
    wrap_angle(theta)
}

#[pyfunction]
fn identity_segment(l: usize) -> PyResult<Vec<(f64, f64, f64)>> {
    Ok(tuples(&make_identity_segment(l).map_err(py_err)?))
}

/// `u` followed by its reversed, negated increments.
#[pyfunction]
fn inverse_segment(actions: Vec<(f64, f64, f64)>) -> PyResult<Vec<(f64, f64, f64)>> {
    Ok(tuples(
        &make_inverse_segment(&segment(actions)).map_err(py_err)?,
    ))
}

/// Dirichlet redistribution of the summed increment over `len(actions)` steps.
#[pyfunction]
#[pyo3(signature = (actions, concentration=1.0, seed=0))]
fn compatibility_segment(
    actions: Vec<(f64, f64, f64)>,
    concentration: f64,
    seed: u64,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let params = DirichletParams::new(concentration, seed).map_err(py_err)?;
    Ok(tuples(
        &make_compatibility_segment(&segment(actions), &params).map_err(py_err)?,
    ))
}

/// Generates the `"train"` or `"eval"` split described by a config file
/// (defaults when `config` is None).
#[pyfunction]
#[pyo3(signature = (split="eval", config=None))]
fn generate_dataset(split: &str, config: Option<PathBuf>) -> PyResult<PyDataset> {
    let cfg = load_config(config)?;
    let split = match split {
        "train" => Split::Train,
        "eval" => Split::Eval,
        other => {
            return Err(PyValueError::new_err(format!(
                "split must be 'train' or 'eval', got {other:?}"
            )))
        }
    };
    Ok(PyDataset {
        inner: generate_split(&cfg.dataset, split).map_err(py_err)?,
    })
}

/// GAC report of `model` on `dataset` using the config's probe grid.
#[pyfunction]
#[pyo3(signature = (model, dataset, config=None))]
fn gac<'py>(
    py: Python<'py>,
    model: &WorldModel,
    dataset: &PyDataset,
    config: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = load_config(config)?;
    let report = run_gac(&model.inner, &dataset.inner.sequences, &cfg.probes).map_err(py_err)?;
    to_py(py, &report)
}

/// GAR reports of `model` on `dataset` using the config's GAR settings.
#[pyfunction]
#[pyo3(signature = (model, dataset, config=None))]
fn gar<'py>(
    py: Python<'py>,
    model: &WorldModel,
    dataset: &PyDataset,
    config: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = load_config(config)?;
    let suite = run_gar(&model.inner, &dataset.inner.sequences, &cfg.gar).map_err(py_err)?;
    to_py(py, &suite)
}

/// Runs `gawm train` in-process; returns the label, checkpoint path and hash,
/// and the eval prediction loss.
#[pyfunction]
#[pyo3(signature = (config=None, label=None, output_dir=None))]
fn train<'py>(
    py: Python<'py>,
    config: Option<PathBuf>,
    label: Option<&str>,
    output_dir: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = load_config(config)?;
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    let s = py.detach(|| cmd_train(&cfg, label)).map_err(py_err)?;
    let v = serde_json::json!({
        "label": s.label,
        "checkpoint": s.checkpoint_path,
        "checkpoint_hash": s.manifest.checkpoint_hash,
        "eval_prediction_loss": s.eval_prediction_loss,
    });
    json_to_py(py, &v)
}

/// Default experiment configuration rendered as TOML.
#[pyfunction]
fn default_config() -> String {
    ExperimentConfig::default().render(gawm::config::ConfigFormat::Toml)
}

#[pymodule]
fn gawm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Pose2>()?;
    m.add_class::<WorldModel>()?;
    m.add_class::<PyDataset>()?;
    m.add_function(wrap_pyfunction!(wrap, m)?)?;
    m.add_function(wrap_pyfunction!(identity_segment, m)?)?;
    m.add_function(wrap_pyfunction!(inverse_segment, m)?)?;
    m.add_function(wrap_pyfunction!(compatibility_segment, m)?)?;
    m.add_function(wrap_pyfunction!(generate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(gac, m)?)?;
    m.add_function(wrap_pyfunction!(gar, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    Ok(())
}
