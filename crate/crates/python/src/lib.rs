//! Python bindings, imported as `mmsum`.
//!
//! Structured values cross the boundary as plain dicts and lists (via JSON),
//! so Python sees exactly the field names of the JSON exports.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};
use serde::Serialize;
use serde_json::{Map, Value};

use mmsum_core::domain::{builtin_presets, DEFAULT_SEED};
use mmsum_core::embedding::{embed_image, embed_text, EmbeddingError};
use mmsum_core::evaluation::{
    self, emit_report, evaluate_dataset, synthetic_rows, write_rows, EvaluateOptions, MetricsError, ReportFormat,
};
use mmsum_core::retrieval::FixtureCorpus;
use mmsum_core::summarizer::{render, ExportFormat};
use mmsum_core::{
    default_fixture_dir, load_presets, normalize_topic as normalize, AlignmentScore, Embedding, Modality, Pipeline,
    PipelineError, Preset, SelectionParams, StubEmbedder as CoreStub, SummaryBundle,
};

create_exception!(mmsum, ConfigError, PyValueError, "Invalid configuration; `field` names the culprit.");
create_exception!(mmsum, PipelineFailure, PyRuntimeError, "A summarization run failed.");

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn from_py(obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn config_error(py: Python<'_>, field: &str, message: String) -> PyErr {
    let err = ConfigError::new_err(message);
    if let Err(e) = err.value(py).setattr("field", field) {
        return e;
    }
    err
}

fn pipeline_error(py: Python<'_>, err: PipelineError) -> PyErr {
    match err {
        PipelineError::Config(e) => config_error(py, e.field, e.to_string()),
        other => PipelineFailure::new_err(other.to_string()),
    }
}

fn metrics_error(err: MetricsError) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn embedding_error(err: EmbeddingError) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn read_presets(path: Option<PathBuf>) -> PyResult<Vec<Preset>> {
    match path {
        None => Ok(builtin_presets()),
        Some(p) => load_presets(&p).map_err(|e| PyValueError::new_err(e.to_string())),
    }
}

fn overrides_map(overrides: Option<&Bound<'_, PyDict>>) -> PyResult<Map<String, Value>> {
    match overrides {
        None => Ok(Map::new()),
        Some(d) => match from_py(d.as_any())? {
            Value::Object(m) => Ok(m),
            _ => Err(PyValueError::new_err("overrides must be a dict")),
        },
    }
}

fn export_format(name: &str) -> PyResult<ExportFormat> {
    match name {
        "markdown" | "md" => Ok(ExportFormat::Markdown),
        "json" => Ok(ExportFormat::Json),
        other => Err(PyValueError::new_err(format!("unknown format `{other}`"))),
    }
}

/// Lowercases and collapses whitespace; raises ValueError on an empty topic.
#[pyfunction]
fn normalize_topic(raw: &str) -> PyResult<String> {
    normalize(raw)
        .map(|t| t.normalized)
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Defaults, then `preset`, then `overrides`, validated.
#[pyfunction]
#[pyo3(signature = (preset=None, overrides=None, presets_path=None))]
fn resolve_config(
    py: Python<'_>,
    preset: Option<&str>,
    overrides: Option<&Bound<'_, PyDict>>,
    presets_path: Option<PathBuf>,
) -> PyResult<Py<PyAny>> {
    let presets = read_presets(presets_path)?;
    let config = mmsum_core::resolve_config(&presets, preset, &overrides_map(overrides)?)
        .map_err(|e| config_error(py, &e.field, e.to_string()))?;
    to_py(py, &config)
}

/// A finished run.
#[pyclass(module = "mmsum", frozen)]
struct Summary {
    bundle: SummaryBundle,
}

#[pymethods]
impl Summary {
    #[getter]
    fn topic(&self) -> &str {
        &self.bundle.topic.normalized
    }

    #[getter]
    fn markdown(&self) -> &str {
        &self.bundle.rendered_markdown
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.bundle.warnings.clone()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.bundle.run_seed
    }

    #[getter]
    fn segment_ids(&self) -> Vec<String> {
        self.bundle.selected_segments.iter().map(|s| s.segment.segment_id.clone()).collect()
    }

    #[getter]
    fn image_ids(&self) -> Vec<String> {
        self.bundle.selected_images.iter().map(|i| i.image.image_id.clone()).collect()
    }

    /// The structured record, as written to `summary.json`.
    fn record(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.bundle.structured)
    }

    /// The whole bundle, including selections with scores.
    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.bundle)
    }

    /// Export bytes: `"markdown"` or `"json"`.
    #[pyo3(signature = (format="markdown"))]
    fn render<'py>(&self, py: Python<'py>, format: &str) -> PyResult<Bound<'py, PyBytes>> {
        Ok(PyBytes::new(py, &render(&self.bundle, export_format(format)?)))
    }

    /// Writes the export chosen by the file extension (`.md` or `.json`).
    fn export(&self, path: PathBuf) -> PyResult<()> {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or_default();
        let format = ExportFormat::from_extension(ext)
            .ok_or_else(|| PyValueError::new_err(format!("unsupported extension `{ext}`")))?;
        mmsum_core::summarizer::export(&self.bundle, format, &path).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Summary(topic={:?}, segments={}, images={})",
            self.bundle.topic.normalized,
            self.bundle.selected_segments.len(),
            self.bundle.selected_images.len()
        )
    }
}

/// Offline summarizer over a recorded-fixture corpus with the stub encoder
/// and captioner.
#[pyclass(module = "mmsum", frozen)]
struct Summarizer {
    corpus: Arc<FixtureCorpus>,
    presets: Vec<Preset>,
}

#[pymethods]
impl Summarizer {
    #[new]
    #[pyo3(signature = (fixtures=None, presets_path=None))]
    fn new(fixtures: Option<PathBuf>, presets_path: Option<PathBuf>) -> PyResult<Self> {
        let dir = fixtures.unwrap_or_else(default_fixture_dir);
        let corpus = FixtureCorpus::load_dir(&dir).map_err(|e| PyIOError::new_err(e.to_string()))?;
        Ok(Self {
            corpus: Arc::new(corpus),
            presets: read_presets(presets_path)?,
        })
    }

    fn presets(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.presets)
    }

    /// Runs the pipeline. `on_event`, when given, receives each progress
    /// event as a dict.
    #[pyo3(signature = (topic, preset=None, overrides=None, seed=None, on_event=None))]
    fn summarize(
        &self,
        py: Python<'_>,
        topic: &str,
        preset: Option<&str>,
        overrides: Option<&Bound<'_, PyDict>>,
        seed: Option<u64>,
        on_event: Option<Bound<'_, PyAny>>,
    ) -> PyResult<Summary> {
        let mut query = normalize(topic).map_err(|e| config_error(py, "topic", e.to_string()))?;
        if let Some(seed) = seed {
            query = query.with_seed(seed);
        }
        let config = mmsum_core::resolve_config(&self.presets, preset, &overrides_map(overrides)?)
            .map_err(|e| config_error(py, &e.field, e.to_string()))?;
        let pipeline = Pipeline::offline(self.corpus.clone(), query.seed);
        let result = match on_event {
            None => py.detach(|| pipeline.run(&query, config, &mut |_| {})),
            Some(callback) => {
                let mut failure: Option<PyErr> = None;
                let result = pipeline.run(&query, config, &mut |ev| {
                    if failure.is_none() {
                        if let Err(e) = to_py(py, &ev).and_then(|d| callback.call1((d,)).map(drop)) {
                            failure = Some(e);
                        }
                    }
                });
                if let Some(e) = failure {
                    return Err(e);
                }
                result
            }
        };
        result.map(|bundle| Summary { bundle }).map_err(|e| pipeline_error(py, e))
    }
}

/// Deterministic hashed bag-of-words encoder.
#[pyclass(module = "mmsum", frozen)]
struct StubEmbedder {
    inner: CoreStub,
}

#[pymethods]
impl StubEmbedder {
    #[new]
    #[pyo3(signature = (seed=None))]
    fn new(seed: Option<u64>) -> Self {
        Self {
            inner: seed.map(CoreStub::new).unwrap_or_default(),
        }
    }

    #[getter]
    fn dim(&self) -> usize {
        mmsum_core::EmbeddingProvider::dim(&self.inner)
    }

    fn embed_text(&self, text: &str) -> PyResult<Vec<f32>> {
        embed_text(&self.inner, text).map(|e| e.vector).map_err(embedding_error)
    }

    fn embed_image(&self, data: &[u8]) -> PyResult<Vec<f32>> {
        embed_image(&self.inner, data).map(|e| e.vector).map_err(embedding_error)
    }
}

fn unit(modality: Modality, v: &[f64]) -> PyResult<Embedding> {
    Embedding::normalized(modality, v, "python").map_err(embedding_error)
}

/// Blends topic relevance of a text and/or image vector.
#[pyfunction]
#[pyo3(signature = (topic, text=None, image=None, alpha=0.5))]
fn score_candidate(
    py: Python<'_>,
    topic: Vec<f64>,
    text: Option<Vec<f64>>,
    image: Option<Vec<f64>>,
    alpha: f64,
) -> PyResult<Py<PyAny>> {
    let topic = unit(Modality::Text, &topic)?;
    let text = text.map(|v| unit(Modality::Text, &v)).transpose()?;
    let image = image.map(|v| unit(Modality::Image, &v)).transpose()?;
    let score = mmsum_core::score_candidate("candidate", &topic, text.as_ref(), image.as_ref(), alpha)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &score)
}

/// Threshold then MMR over `scores`; returns picked indices in pick order.
/// Without `vectors` there is no redundancy penalty.
#[pyfunction]
#[pyo3(signature = (scores, limit, min_score=-1.0, diversity_lambda=1.0, vectors=None))]
fn select_top(
    scores: Vec<f64>,
    limit: usize,
    min_score: f64,
    diversity_lambda: f64,
    vectors: Option<Vec<Vec<f64>>>,
) -> PyResult<Vec<usize>> {
    if vectors.as_ref().is_some_and(|v| v.len() != scores.len()) {
        return Err(PyValueError::new_err("vectors and scores differ in length"));
    }
    let scored: Vec<AlignmentScore> = scores
        .iter()
        .enumerate()
        .map(|(i, &s)| AlignmentScore {
            target_id: i.to_string(),
            text_sim: Some(s),
            image_sim: None,
            combined: s,
            alpha_used: 1.0,
        })
        .collect();
    let mut embeddings = HashMap::new();
    for (i, v) in vectors.iter().flatten().enumerate() {
        embeddings.insert(i.to_string(), unit(Modality::Text, v)?);
    }
    let params = SelectionParams {
        limit,
        min_score,
        lambda: diversity_lambda,
    };
    Ok(mmsum_core::select_top(&scored, &params, &embeddings)
        .into_iter()
        .map(|s| s.target_id.parse().expect("index id"))
        .collect())
}

fn labeled(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<Vec<(f64, bool)>> {
    if scores.len() != labels.len() {
        return Err(PyValueError::new_err("scores and labels differ in length"));
    }
    Ok(scores.into_iter().zip(labels).collect())
}

#[pyfunction]
fn roc_auc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<f64> {
    evaluation::roc_auc(&labeled(scores, labels)?).map_err(metrics_error)
}

#[pyfunction]
fn pr_auc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<f64> {
    evaluation::pr_auc(&labeled(scores, labels)?).map_err(metrics_error)
}

/// Metrics at the F1-maximizing threshold.
#[pyfunction]
fn best_threshold(py: Python<'_>, scores: Vec<f64>, labels: Vec<bool>) -> PyResult<Py<PyAny>> {
    let m = evaluation::best_threshold_metrics(&labeled(scores, labels)?).map_err(metrics_error)?;
    to_py(py, &m)
}

/// Writes a synthetic, separable JSONL dataset.
#[pyfunction]
#[pyo3(signature = (path, positives=500, seed=DEFAULT_SEED))]
fn synthetic_dataset(path: PathBuf, positives: usize, seed: u64) -> PyResult<()> {
    let rows = synthetic_rows(positives, seed, &CoreStub::default());
    write_rows(&rows, &path).map_err(|e| PyIOError::new_err(e.to_string()))
}

/// Contrastive evaluation of a JSONL dataset with the stub encoder. Returns
/// the report dict; also writes it when `report` is a `.json` or `.md` path.
#[pyfunction]
#[pyo3(signature = (dataset, negative_ratio=20, seed=DEFAULT_SEED, top_k=None, report=None))]
fn evaluate(
    py: Python<'_>,
    dataset: PathBuf,
    negative_ratio: usize,
    seed: u64,
    top_k: Option<Vec<usize>>,
    report: Option<PathBuf>,
) -> PyResult<Py<PyAny>> {
    let mut options = EvaluateOptions {
        negative_ratio,
        seed,
        ..EvaluateOptions::default()
    };
    if let Some(k) = top_k {
        options.top_k = k;
    }
    let result = py
        .detach(|| evaluate_dataset(&dataset, &CoreStub::default(), &options))
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    if let Some(path) = report {
        emit_report(&result, ReportFormat::for_path(&path), &path).map_err(|e| PyIOError::new_err(e.to_string()))?;
    }
    to_py(py, &result)
}

/// The bundled recorded-fixture corpus.
#[pyfunction]
fn fixture_dir() -> PathBuf {
    default_fixture_dir()
}

/// Module initializer; public so embedders can register it with
/// `pyo3::append_to_inittab!`.
#[pymodule]
pub fn mmsum(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add("PipelineFailure", py.get_type::<PipelineFailure>())?;
    m.add("DEFAULT_SEED", DEFAULT_SEED)?;
    m.add_class::<Summarizer>()?;
    m.add_class::<Summary>()?;
    m.add_class::<StubEmbedder>()?;
    m.add_function(wrap_pyfunction!(normalize_topic, m)?)?;
    m.add_function(wrap_pyfunction!(resolve_config, m)?)?;
    m.add_function(wrap_pyfunction!(score_candidate, m)?)?;
    m.add_function(wrap_pyfunction!(select_top, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(pr_auc, m)?)?;
    m.add_function(wrap_pyfunction!(best_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(fixture_dir, m)?)?;
    Ok(())
}
