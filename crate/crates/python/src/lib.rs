//! Python bindings: `import eas`.

use std::path::PathBuf;

use eas_core::backend::BackendConfig;
use eas_core::parser::{self, AnalysisRecord, CodeStatus, ErrorFinding};
use eas_core::pipeline::{analyze_document, RunConfig, DEFAULT_MAX_SENTENCE_RETRIES};
use eas_core::resolver;
use eas_core::scorer;
use eas_core::taxonomy::{self, parse_code};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn status_str(status: CodeStatus) -> &'static str {
    match status {
        CodeStatus::Known => "known",
        CodeStatus::UnknownCode => "unknown_code",
        CodeStatus::MalformedCode => "malformed_code",
    }
}

/// A validated error taxonomy.
#[pyclass(frozen, module = "eas")]
struct Taxonomy {
    inner: taxonomy::Taxonomy,
}

#[pymethods]
impl Taxonomy {
    /// Parse taxonomy JSON; raises ValueError on schema or reference errors.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        taxonomy::load_taxonomy(text).map(|inner| Taxonomy { inner }).map_err(value_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Diagnostics as display strings; empty when the taxonomy is clean.
    fn validate(&self) -> Vec<String> {
        self.inner.validate().iter().map(ToString::to_string).collect()
    }

    fn codes(&self) -> Vec<String> {
        self.inner.nodes().iter().map(|n| n.code.to_string()).collect()
    }

    fn __contains__(&self, code: &str) -> bool {
        parse_code(code).is_ok_and(|c| self.inner.contains(&c))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn to_json(&self) -> String {
        self.inner.to_json_string()
    }
}

#[pyclass(frozen, module = "eas", get_all, skip_from_py_object)]
#[derive(Clone)]
struct Finding {
    ordinal: u32,
    code: String,
    span: String,
    explanation: String,
    /// "known", "unknown_code", "malformed_code", or None before resolution.
    status: Option<&'static str>,
    span_not_in_ot: bool,
    suppressed_by: Option<u32>,
}

impl From<&ErrorFinding> for Finding {
    fn from(f: &ErrorFinding) -> Self {
        Finding {
            ordinal: f.ordinal,
            code: f.code_text.clone(),
            span: f.span.clone(),
            explanation: f.explanation.clone(),
            status: f.code_status.map(status_str),
            span_not_in_ot: f.span_not_in_ot,
            suppressed_by: f.suppressed_by,
        }
    }
}

#[pymethods]
impl Finding {
    fn __repr__(&self) -> String {
        format!("Finding({}, {:?}, {:?})", self.code, self.span, self.explanation)
    }
}

/// One analyzed sentence.
#[pyclass(frozen, module = "eas")]
struct Record {
    inner: AnalysisRecord,
}

#[pymethods]
impl Record {
    #[getter]
    fn original_text(&self) -> &str {
        &self.inner.original_text
    }

    #[getter]
    fn corrected_text(&self) -> &str {
        &self.inner.corrected_text
    }

    #[getter]
    fn no_errors_declared(&self) -> bool {
        self.inner.no_errors_declared
    }

    #[getter]
    fn analysis_failed(&self) -> bool {
        self.inner.analysis_failed
    }

    #[getter]
    fn findings(&self) -> Vec<Finding> {
        self.inner.findings.iter().map(Finding::from).collect()
    }

    fn render(&self) -> String {
        parser::render_record(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Record({:?}, {} findings)", self.inner.original_text, self.inner.findings.len())
    }
}

/// Sentences of a document as (index, speaker, text) tuples.
#[pyfunction]
fn chunk_text(text: &str) -> Vec<(usize, Option<String>, String)> {
    eas_core::chunker::chunk_text(text).into_iter().map(|c| (c.index, c.speaker, c.text)).collect()
}

/// Parse response text into records; raises ValueError with the line number.
#[pyfunction]
fn parse_response(text: &str) -> PyResult<Vec<Record>> {
    let records = parser::parse_response(text).map_err(value_err)?;
    Ok(records.into_iter().map(|inner| Record { inner }).collect())
}

/// Classify codes and apply the hierarchy rules. Returns the annotated record
/// and one status dict per finding.
#[pyfunction]
fn resolve<'py>(py: Python<'py>, taxonomy: &Taxonomy, record: &Record) -> PyResult<(Record, Vec<Bound<'py, PyDict>>)> {
    let (annotated, _, reports) = resolver::resolve_record(&taxonomy.inner, &record.inner);
    let reports = reports
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("ordinal", r.ordinal)?;
            d.set_item("code", &r.code_text)?;
            d.set_item("status", status_str(r.status))?;
            d.set_item("nearest_known", r.nearest_known.map(|c| c.to_string()))?;
            d.set_item("label_drift", r.label_drift)?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    Ok((Record { inner: annotated }, reports))
}

/// Score prediction text against gold JSON text; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (predictions, gold, three_class = false))]
fn score<'py>(py: Python<'py>, predictions: &str, gold: &str, three_class: bool) -> PyResult<Bound<'py, PyAny>> {
    let predictions = parser::parse_response(predictions).map_err(value_err)?;
    let gold = scorer::parse_gold(gold).map_err(value_err)?;
    let report = scorer::score_run(&predictions, &gold, three_class).map_err(value_err)?;
    json_to_py(py, &report.to_json())
}

/// Run the pipeline with canned responses and return the run report.
#[pyfunction]
#[pyo3(signature = (taxonomy, input, out, fixtures, parallelism = 1, max_retries = DEFAULT_MAX_SENTENCE_RETRIES))]
fn analyze<'py>(
    py: Python<'py>,
    taxonomy: PathBuf,
    input: PathBuf,
    out: PathBuf,
    fixtures: PathBuf,
    parallelism: usize,
    max_retries: u32,
) -> PyResult<Bound<'py, PyAny>> {
    let mut config = RunConfig::new(taxonomy, input, out, BackendConfig::fixture(fixtures));
    config.parallelism = parallelism;
    config.max_sentence_retries = max_retries;
    let report = py.detach(|| analyze_document(&config)).map_err(value_err)?;
    json_to_py(py, &report.to_json())
}

#[pymodule]
fn eas(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Taxonomy>()?;
    m.add_class::<Finding>()?;
    m.add_class::<Record>()?;
    m.add_function(wrap_pyfunction!(chunk_text, m)?)?;
    m.add_function(wrap_pyfunction!(parse_response, m)?)?;
    m.add_function(wrap_pyfunction!(resolve, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
