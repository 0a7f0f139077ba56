//! Parser and renderer for the analysis response grammar:
//!
//! ```text
//! OT: <original sentence>
//! Corrected: <corrected sentence>
//! 1st Error & Reason: <code>, <span>, <explanation>
//! 2nd Error & Reason: ...
//! ```
//!
//! or `[No errors]` in place of the finding lines. The same grammar is the
//! pipeline's output format, which may additionally carry
//! `Corrected: [ANALYSIS FAILED]` records and a trailing
//! ` [suppressed by rule N]` on finding lines.

use std::fmt::Write as _;
use std::sync::OnceLock;

use regex::Regex;
use serde::Serialize;
use thiserror::Error;

use crate::taxonomy::{parse_code, ErrorCode};

pub const OT_PREFIX: &str = "OT:";
pub const CORRECTED_PREFIX: &str = "Corrected:";
pub const NO_ERRORS: &str = "[No errors]";
pub const ANALYSIS_FAILED: &str = "[ANALYSIS FAILED]";
pub const FINDING_LABEL: &str = "Error & Reason:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeStatus {
    Known,
    UnknownCode,
    MalformedCode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorFinding {
    /// 1-based position in its record.
    pub ordinal: u32,
    /// The code exactly as written.
    pub code_text: String,
    /// Absent when `code_text` is malformed.
    pub code: Option<ErrorCode>,
    pub span: String,
    pub explanation: String,
    /// `MalformedCode` from parsing; otherwise `None` until the resolver
    /// classifies the code against a taxonomy.
    pub code_status: Option<CodeStatus>,
    /// The span does not occur verbatim in the record's original text.
    pub span_not_in_ot: bool,
    /// Ordinal of the hierarchy rule that suppressed this finding.
    pub suppressed_by: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisRecord {
    pub original_text: String,
    pub corrected_text: String,
    pub findings: Vec<ErrorFinding>,
    pub no_errors_declared: bool,
    /// Placeholder written for a sentence the pipeline gave up on.
    pub analysis_failed: bool,
}

impl AnalysisRecord {
    pub fn failed(original_text: impl Into<String>) -> Self {
        AnalysisRecord {
            original_text: original_text.into(),
            corrected_text: ANALYSIS_FAILED.to_string(),
            findings: Vec::new(),
            no_errors_declared: false,
            analysis_failed: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("record has no \"Corrected:\" line")]
    MissingCorrectedLine,
    #[error("finding ordinals are not consecutive: expected {expected}, found {found}")]
    NonConsecutiveOrdinals { expected: u32, found: u32 },
    #[error("record has neither findings nor \"[No errors]\"")]
    EmptyRecord,
    #[error("unrecognized line {0:?}")]
    GarbageLine(String),
    #[error("finding ordinal {found} where {expected} was expected")]
    OrdinalMismatch { expected: u32, found: u32 },
    #[error("finding needs code, span and explanation separated by commas")]
    TooFewFields,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    /// 1-based line in the parsed text.
    pub line: usize,
    pub kind: ParseErrorKind,
}

fn finding_prefix() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^([1-9][0-9]?)(st|nd|rd|th) Error & Reason:(.*)$").unwrap())
}

fn suppression_note() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r" \[suppressed by rule ([0-9]+)\]$").unwrap())
}

/// English ordinal suffix: 1st, 2nd, 3rd, 4th, 11th, 21st, ...
pub fn ordinal_suffix(n: u32) -> &'static str {
    match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    }
}

fn is_finding_line(line: &str) -> bool {
    finding_prefix().is_match(line)
}

/// Parse one `Nth Error & Reason: code, span, explanation` line.
pub fn parse_finding_line(line: &str, expected_ordinal: u32) -> Result<ErrorFinding, ParseErrorKind> {
    let caps = finding_prefix().captures(line).ok_or_else(|| ParseErrorKind::GarbageLine(line.to_string()))?;
    let ordinal: u32 = caps[1].parse().expect("regex admits 1..=99");
    if &caps[2] != ordinal_suffix(ordinal) {
        return Err(ParseErrorKind::GarbageLine(line.to_string()));
    }
    if ordinal != expected_ordinal {
        return Err(ParseErrorKind::OrdinalMismatch { expected: expected_ordinal, found: ordinal });
    }

    let mut payload = caps.get(3).unwrap().as_str();
    let mut suppressed_by = None;
    if let Some(note) = suppression_note().captures(payload) {
        suppressed_by = note[1].parse().ok();
        payload = &payload[..note.get(0).unwrap().start()];
    }

    let mut fields = payload.splitn(3, ',');
    let (Some(code_text), Some(span), Some(explanation)) = (fields.next(), fields.next(), fields.next()) else {
        return Err(ParseErrorKind::TooFewFields);
    };
    let (code_text, span, explanation) = (code_text.trim(), span.trim(), explanation.trim());
    if code_text.is_empty() || span.is_empty() || explanation.is_empty() {
        return Err(ParseErrorKind::TooFewFields);
    }

    let code = parse_code(code_text).ok();
    Ok(ErrorFinding {
        ordinal,
        code_text: code_text.to_string(),
        code,
        span: span.to_string(),
        explanation: explanation.to_string(),
        code_status: code.is_none().then_some(CodeStatus::MalformedCode),
        span_not_in_ot: false,
        suppressed_by,
    })
}

struct Pending {
    ot_line: usize,
    original_text: String,
    corrected_text: Option<String>,
    findings: Vec<ErrorFinding>,
    no_errors_declared: bool,
}

impl Pending {
    fn finish(self) -> Result<AnalysisRecord, ParseError> {
        let err = |kind| ParseError { line: self.ot_line, kind };
        let corrected_text = self.corrected_text.clone().ok_or_else(|| err(ParseErrorKind::MissingCorrectedLine))?;
        if corrected_text == ANALYSIS_FAILED && self.findings.is_empty() && !self.no_errors_declared {
            return Ok(AnalysisRecord::failed(self.original_text));
        }
        if self.findings.is_empty() && !self.no_errors_declared {
            return Err(err(ParseErrorKind::EmptyRecord));
        }
        let mut findings = self.findings;
        for f in &mut findings {
            f.span_not_in_ot = !self.original_text.contains(&f.span);
        }
        Ok(AnalysisRecord {
            original_text: self.original_text,
            corrected_text,
            findings,
            no_errors_declared: self.no_errors_declared,
            analysis_failed: false,
        })
    }
}

/// Parse a raw response into records. Lines before the first `OT:` line
/// (reasoning preambles and the like) are discarded; blank lines are ignored.
pub fn parse_response(raw: &str) -> Result<Vec<AnalysisRecord>, ParseError> {
    let mut records = Vec::new();
    let mut pending: Option<Pending> = None;

    for (i, raw_line) in raw.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.trim();
        let garbage = || ParseError { line: line_no, kind: ParseErrorKind::GarbageLine(line.to_string()) };

        if let Some(rest) = line.strip_prefix(OT_PREFIX) {
            if let Some(done) = pending.take() {
                records.push(done.finish()?);
            }
            let original_text = rest.trim();
            if original_text.is_empty() {
                return Err(ParseError { line: line_no, kind: ParseErrorKind::EmptyRecord });
            }
            pending = Some(Pending {
                ot_line: line_no,
                original_text: original_text.to_string(),
                corrected_text: None,
                findings: Vec::new(),
                no_errors_declared: false,
            });
            continue;
        }
        let Some(rec) = pending.as_mut() else {
            continue;
        };
        if line.is_empty() {
            continue;
        }

        if let Some(rest) = line.strip_prefix(CORRECTED_PREFIX) {
            if rec.corrected_text.is_some() {
                return Err(garbage());
            }
            let corrected = rest.trim();
            if corrected.is_empty() {
                return Err(ParseError { line: line_no, kind: ParseErrorKind::MissingCorrectedLine });
            }
            rec.corrected_text = Some(corrected.to_string());
        } else if line == NO_ERRORS || is_finding_line(line) {
            if rec.corrected_text.is_none() {
                return Err(ParseError { line: line_no, kind: ParseErrorKind::MissingCorrectedLine });
            }
            if rec.no_errors_declared {
                return Err(garbage());
            }
            if line == NO_ERRORS {
                if !rec.findings.is_empty() {
                    return Err(garbage());
                }
                rec.no_errors_declared = true;
            } else {
                let expected = rec.findings.len() as u32 + 1;
                let finding = parse_finding_line(line, expected).map_err(|kind| {
                    let kind = match kind {
                        ParseErrorKind::OrdinalMismatch { expected, found } => {
                            ParseErrorKind::NonConsecutiveOrdinals { expected, found }
                        }
                        other => other,
                    };
                    ParseError { line: line_no, kind }
                })?;
                rec.findings.push(finding);
            }
        } else {
            return Err(garbage());
        }
    }
    if let Some(done) = pending.take() {
        records.push(done.finish()?);
    }
    Ok(records)
}

/// The finding line as it appears in a response, renumbered to `ordinal`.
pub fn render_finding(finding: &ErrorFinding, ordinal: u32) -> String {
    let mut line = format!(
        "{ordinal}{} {FINDING_LABEL} {}, {}, {}",
        ordinal_suffix(ordinal),
        finding.code_text,
        finding.span,
        finding.explanation
    );
    if let Some(rule) = finding.suppressed_by {
        write!(line, " [suppressed by rule {rule}]").unwrap();
    }
    line
}

/// One record, each line LF-terminated. Findings are numbered by position.
pub fn render_record(record: &AnalysisRecord) -> String {
    let mut out = format!("{OT_PREFIX} {}\n{CORRECTED_PREFIX} {}\n", record.original_text, record.corrected_text);
    if record.analysis_failed {
        return out;
    }
    if record.findings.is_empty() {
        out.push_str(NO_ERRORS);
        out.push('\n');
    }
    for (i, f) in record.findings.iter().enumerate() {
        out.push_str(&render_finding(f, i as u32 + 1));
        out.push('\n');
    }
    out
}

/// Records separated by one blank line; empty input renders as "".
pub fn render_records(records: &[AnalysisRecord]) -> String {
    records.iter().map(render_record).collect::<Vec<_>>().join("\n")
}
