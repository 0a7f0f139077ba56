//! End-to-end document analysis: chunk, prompt, complete, parse, retry the
//! sentences that came back missing or unparseable, resolve, write.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::backend::{open_backend, BackendConfig, BackendError, CompletionBackend, CompletionRequest, DEFAULT_TIMEOUT};
use crate::chunker::{chunk_text, normalize_sentence, Chunk};
use crate::parser::{parse_response, render_records, AnalysisRecord, CodeStatus};
use crate::prompting::{PromptBuilder, DEFAULT_TEMPERATURE};
use crate::resolver::resolve_record;
use crate::taxonomy::{load_taxonomy, Taxonomy, TaxonomyError};

pub const DEFAULT_MAX_SENTENCE_RETRIES: u32 = 3;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot read taxonomy {path}: {source}")]
    TaxonomyUnreadable { path: PathBuf, source: std::io::Error },
    #[error("taxonomy is invalid: {0}")]
    TaxonomyInvalid(#[from] TaxonomyError),
    #[error("cannot read input {path}: {source}")]
    InputUnreadable { path: PathBuf, source: std::io::Error },
    #[error("backend failure: {0}")]
    BackendFatal(#[from] BackendError),
    #[error("cannot write {path}: {source}")]
    OutputUnwritable { path: PathBuf, source: std::io::Error },
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub taxonomy_path: PathBuf,
    pub input_path: PathBuf,
    pub output_path: PathBuf,
    pub report_path: Option<PathBuf>,
    pub backend: BackendConfig,
    pub max_sentence_retries: u32,
    /// Chunks in flight at once; at least 1.
    pub parallelism: usize,
    pub temperature: f64,
    pub request_timeout: Duration,
}

impl RunConfig {
    pub fn new(
        taxonomy_path: impl Into<PathBuf>,
        input_path: impl Into<PathBuf>,
        output_path: impl Into<PathBuf>,
        backend: BackendConfig,
    ) -> Self {
        RunConfig {
            taxonomy_path: taxonomy_path.into(),
            input_path: input_path.into(),
            output_path: output_path.into(),
            report_path: None,
            backend,
            max_sentence_retries: DEFAULT_MAX_SENTENCE_RETRIES,
            parallelism: 1,
            temperature: DEFAULT_TEMPERATURE,
            request_timeout: DEFAULT_TIMEOUT,
        }
    }

    fn validate(&self) -> Result<(), PipelineError> {
        for (name, p) in [("taxonomy", &self.taxonomy_path), ("input", &self.input_path), ("output", &self.output_path)] {
            if p.as_os_str().is_empty() {
                return Err(PipelineError::InvalidConfig(format!("{name} path is empty")));
            }
        }
        if self.parallelism == 0 {
            return Err(PipelineError::InvalidConfig("parallelism must be at least 1".into()));
        }
        if self.request_timeout.is_zero() {
            return Err(PipelineError::InvalidConfig("request timeout must be positive".into()));
        }
        Ok(())
    }
}

/// Knobs for [`analyze_chunks`].
#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub max_sentence_retries: u32,
    pub parallelism: usize,
    pub temperature: f64,
    pub model_hint: Option<String>,
    pub request_timeout: Duration,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            max_sentence_retries: DEFAULT_MAX_SENTENCE_RETRIES,
            parallelism: 1,
            temperature: DEFAULT_TEMPERATURE,
            model_hint: None,
            request_timeout: DEFAULT_TIMEOUT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChunkStatus {
    Analyzed,
    Retried,
    Abandoned,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChunkReport {
    pub index: usize,
    pub text: String,
    pub status: ChunkStatus,
    /// Re-sends after the first request.
    pub retries: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last_error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CodeStatusCounts {
    pub known: usize,
    pub unknown_code: usize,
    pub malformed_code: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuppressedEntry {
    pub chunk: usize,
    pub code: String,
    pub span: String,
    pub winner_code: String,
    pub winner_span: String,
    pub rule: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FindingEntry {
    pub chunk: usize,
    /// Ordinal as returned by the backend.
    pub response_ordinal: u32,
    pub code: String,
    pub explanation: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nearest_known: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunReport {
    pub chunks: Vec<ChunkReport>,
    pub code_status: CodeStatusCounts,
    pub suppressed: Vec<SuppressedEntry>,
    pub label_drift: Vec<FindingEntry>,
    pub unknown_codes: Vec<FindingEntry>,
    pub duration_ms: u64,
}

impl RunReport {
    pub fn abandoned(&self) -> usize {
        self.chunks.iter().filter(|c| c.status == ChunkStatus::Abandoned).count()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Chunks whose normalized text matches no record's normalized OT. Each
/// record satisfies at most one chunk, earlier chunks first.
pub fn find_missing(sent: &[Chunk], records: &[AnalysisRecord]) -> Vec<Chunk> {
    let mut available: Vec<Option<String>> =
        records.iter().map(|r| Some(normalize_sentence(&r.original_text))).collect();
    let mut missing = Vec::new();
    for chunk in sent {
        let key = normalize_sentence(&chunk.text);
        match available.iter_mut().find(|slot| slot.as_deref() == Some(key.as_str())) {
            Some(slot) => *slot = None,
            None => missing.push(chunk.clone()),
        }
    }
    missing
}

pub fn write_output(records: &[AnalysisRecord], path: &Path) -> Result<(), PipelineError> {
    std::fs::write(path, render_records(records))
        .map_err(|source| PipelineError::OutputUnwritable { path: path.to_path_buf(), source })
}

/// Send one chunk and pick its record out of the response.
fn attempt_chunk(
    backend: &dyn CompletionBackend,
    prompts: &PromptBuilder,
    chunk: &Chunk,
    timeout: Duration,
) -> Result<AnalysisRecord, BackendError> {
    let request = CompletionRequest {
        prompt: prompts.build(chunk),
        chunk_index: chunk.index,
        chunk_text: chunk.text.clone(),
        timeout,
    };
    let result = backend.complete(&request)?;
    let records = parse_response(&result.raw_text).map_err(|e| BackendError::BadResponse(format!("unparseable: {e}")))?;
    let key = normalize_sentence(&chunk.text);
    records
        .into_iter()
        .find(|r| normalize_sentence(&r.original_text) == key)
        .ok_or_else(|| BackendError::BadResponse("response does not echo the sentence".into()))
}

/// Run every pending chunk once, at most `parallelism` at a time. Results
/// come back indexed like `pending`; after a fatal error no further chunks
/// are started and their slots stay empty.
fn run_round(
    backend: &dyn CompletionBackend,
    prompts: &PromptBuilder,
    pending: &[&Chunk],
    parallelism: usize,
    timeout: Duration,
) -> Vec<Option<Result<AnalysisRecord, BackendError>>> {
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let slots: Vec<Mutex<Option<Result<AnalysisRecord, BackendError>>>> = pending.iter().map(|_| Mutex::new(None)).collect();
    let work = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        if i >= pending.len() || stop.load(Ordering::SeqCst) {
            break;
        }
        let outcome = attempt_chunk(backend, prompts, pending[i], timeout);
        if outcome.as_ref().is_err_and(BackendError::is_fatal) {
            stop.store(true, Ordering::SeqCst);
        }
        *slots[i].lock().unwrap() = Some(outcome);
    };
    let workers = parallelism.clamp(1, pending.len().max(1));
    if workers == 1 {
        work();
    } else {
        thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(work);
            }
        });
    }
    slots.into_iter().map(|s| s.into_inner().unwrap()).collect()
}

/// The analysis loop without file I/O. Returns resolved records in chunk
/// order and the report (duration left at zero).
pub fn analyze_chunks(
    tax: &Taxonomy,
    chunks: &[Chunk],
    backend: &dyn CompletionBackend,
    options: &AnalysisOptions,
) -> Result<(Vec<AnalysisRecord>, RunReport), PipelineError> {
    let prompts = PromptBuilder::new(tax).temperature(options.temperature).model_hint(options.model_hint.clone());
    let mut raw: Vec<Option<AnalysisRecord>> = vec![None; chunks.len()];
    let mut sends = vec![0u32; chunks.len()];
    let mut last_error: Vec<Option<String>> = vec![None; chunks.len()];
    let mut pending: Vec<usize> = (0..chunks.len()).collect();

    while !pending.is_empty() {
        let batch: Vec<&Chunk> = pending.iter().map(|&i| &chunks[i]).collect();
        let results = run_round(backend, &prompts, &batch, options.parallelism.max(1), options.request_timeout);
        let mut still_pending = Vec::new();
        for (&i, result) in pending.iter().zip(results) {
            let Some(result) = result else { continue };
            sends[i] += 1;
            match result {
                Ok(record) => raw[i] = Some(record),
                Err(e) if e.is_fatal() => return Err(e.into()),
                Err(e) => {
                    last_error[i] = Some(e.to_string());
                    if sends[i] <= options.max_sentence_retries {
                        still_pending.push(i);
                    }
                }
            }
        }
        pending = still_pending;
    }

    let mut records = Vec::with_capacity(chunks.len());
    let mut report = RunReport {
        chunks: Vec::with_capacity(chunks.len()),
        code_status: CodeStatusCounts::default(),
        suppressed: Vec::new(),
        label_drift: Vec::new(),
        unknown_codes: Vec::new(),
        duration_ms: 0,
    };
    for (i, chunk) in chunks.iter().enumerate() {
        let retries = sends[i] - 1;
        let Some(record) = raw[i].take() else {
            report.chunks.push(ChunkReport {
                index: chunk.index,
                text: chunk.text.clone(),
                status: ChunkStatus::Abandoned,
                retries,
                last_error: last_error[i].take(),
            });
            records.push(AnalysisRecord::failed(chunk.text.clone()));
            continue;
        };
        report.chunks.push(ChunkReport {
            index: chunk.index,
            text: chunk.text.clone(),
            status: if retries == 0 { ChunkStatus::Analyzed } else { ChunkStatus::Retried },
            retries,
            last_error: None,
        });

        let (resolved, outcome, statuses) = resolve_record(tax, &record);
        for (finding, status) in record.findings.iter().zip(&statuses) {
            let entry = || FindingEntry {
                chunk: chunk.index,
                response_ordinal: finding.ordinal,
                code: finding.code_text.clone(),
                explanation: finding.explanation.clone(),
                nearest_known: status.nearest_known.map(|c| c.to_string()),
            };
            match status.status {
                CodeStatus::Known => report.code_status.known += 1,
                CodeStatus::UnknownCode => {
                    report.code_status.unknown_code += 1;
                    report.unknown_codes.push(entry());
                }
                CodeStatus::MalformedCode => report.code_status.malformed_code += 1,
            }
            if status.label_drift {
                report.label_drift.push(entry());
            }
        }
        for s in &outcome.suppressed {
            report.suppressed.push(SuppressedEntry {
                chunk: chunk.index,
                code: s.finding.code_text.clone(),
                span: s.finding.span.clone(),
                winner_code: s.winner.code_text.clone(),
                winner_span: s.winner.span.clone(),
                rule: s.rule,
            });
        }
        records.push(resolved);
    }
    Ok((records, report))
}

/// Run the whole pipeline from files to files.
pub fn analyze_document(config: &RunConfig) -> Result<RunReport, PipelineError> {
    let started = Instant::now();
    config.validate()?;
    let tax_text = std::fs::read_to_string(&config.taxonomy_path)
        .map_err(|source| PipelineError::TaxonomyUnreadable { path: config.taxonomy_path.clone(), source })?;
    let tax = load_taxonomy(&tax_text)?;
    let input = std::fs::read_to_string(&config.input_path)
        .map_err(|source| PipelineError::InputUnreadable { path: config.input_path.clone(), source })?;
    let chunks = chunk_text(&input);
    let backend = open_backend(&config.backend)?;

    let options = AnalysisOptions {
        max_sentence_retries: config.max_sentence_retries,
        parallelism: config.parallelism,
        temperature: config.temperature,
        model_hint: config.backend.model.clone(),
        request_timeout: config.request_timeout,
    };
    let (records, mut report) = analyze_chunks(&tax, &chunks, backend.as_ref(), &options)?;
    write_output(&records, &config.output_path)?;
    report.duration_ms = started.elapsed().as_millis() as u64;
    if let Some(path) = &config.report_path {
        std::fs::write(path, report.to_json())
            .map_err(|source| PipelineError::OutputUnwritable { path: path.clone(), source })?;
    }
    Ok(report)
}
