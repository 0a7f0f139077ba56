//! Taxonomy-driven grammatical error analysis.
//!
//! The pipeline chunks a document into sentences, prompts a completion
//! backend with a three-tier error taxonomy, parses the strictly formatted
//! findings that come back, resolves conflicting codes with the taxonomy's
//! hierarchy rules and scores the result against gold annotations.

pub mod backend;
pub mod chunker;
pub mod cli;
pub mod fixtures;
pub mod parser;
pub mod pipeline;
pub mod prompting;
pub mod resolver;
pub mod scorer;
pub mod taxonomy;

pub use chunker::{chunk_text, normalize_sentence, Chunk};
pub use taxonomy::{load_taxonomy, parse_code, Diagnostic, ErrorCode, Taxonomy, TaxonomyError, TaxonomyNode};
pub use parser::{parse_response, render_records, AnalysisRecord, CodeStatus, ErrorFinding, ParseError, ParseErrorKind};
pub use resolver::{classify_code_status, resolve_conflicts, CodeStatusReport, ResolutionOutcome, Suppression};
pub use backend::{BackendConfig, BackendError, BackendKind, CompletionBackend, CompletionRequest, CompletionResult};
pub use prompting::{build_system_prompt, build_user_prompt, PromptBuilder, PromptPair};
pub use pipeline::{analyze_document, find_missing, write_output, PipelineError, RunConfig, RunReport};
pub use scorer::{align_findings, classify_match, load_gold, score_run, GoldEntry, MatchClass, ScoreError, ScoreReport};
