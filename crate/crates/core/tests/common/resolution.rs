//! Random finding sets over a sentence of distinct words, and a hand-coded
//! reference for the seed taxonomy's hierarchy rules.

use eas_core::parser::{parse_finding_line, AnalysisRecord, ErrorFinding};
use rand::seq::SliceRandom;
use rand::Rng;

pub const WORDS: [&str; 10] = ["ant", "bee", "cat", "dog", "eel", "fox", "gnu", "hen", "ibis", "jay"];

/// Codes mixing every rule trigger with bystanders, an unknown code and a
/// malformed one.
pub const CODES: [&str; 14] = [
    "GS6", "GW3E", "GW11A", "GW11", "GS3", "GW4", "GW4B", "GW4C", "SP1A", "GS2A", "GW1A", "GS1D", "GW14A", "BAD",
];

pub fn sentence() -> String {
    WORDS.join(" ")
}

/// Word range a span covers; `None` when it is not in the sentence.
pub fn word_range(span: &str) -> Option<(usize, usize)> {
    let words: Vec<&str> = span.split(' ').collect();
    let start = WORDS.iter().position(|w| *w == words[0])?;
    (WORDS[start..].iter().take(words.len()).eq(words.iter())).then_some((start, start + words.len()))
}

pub fn finding(ordinal: u32, code: &str, span: &str) -> ErrorFinding {
    let suffix = eas_core::parser::ordinal_suffix(ordinal);
    parse_finding_line(&format!("{ordinal}{suffix} Error & Reason: {code}, {span}, explanation {ordinal}"), ordinal).unwrap()
}

pub fn random_record(rng: &mut impl Rng, max_findings: usize) -> AnalysisRecord {
    let n = rng.gen_range(0..=max_findings);
    let findings = (0..n)
        .map(|i| {
            let code = CODES.choose(rng).unwrap();
            let span = if rng.gen_bool(0.1) {
                "zebra".to_string()
            } else {
                let start = rng.gen_range(0..WORDS.len());
                let len = rng.gen_range(1..=3.min(WORDS.len() - start));
                WORDS[start..start + len].join(" ")
            };
            finding(i as u32 + 1, code, &span)
        })
        .collect::<Vec<_>>();
    AnalysisRecord {
        original_text: sentence(),
        corrected_text: sentence(),
        no_errors_declared: findings.is_empty(),
        findings,
        analysis_failed: false,
    }
}

pub fn renumber(mut findings: Vec<ErrorFinding>) -> Vec<ErrorFinding> {
    for (i, f) in findings.iter_mut().enumerate() {
        f.ordinal = i as u32 + 1;
    }
    findings
}

fn tier1(code: &str) -> &str {
    &code[..2]
}

fn parent(code: &str) -> Option<&str> {
    code.ends_with(|c: char| c.is_ascii_uppercase()).then(|| &code[..code.len() - 1])
}

/// Does `a` beat `b` under the seed rules? Rule 5 (GW11 over GS3) outranks
/// rule 2 (GS over GW).
pub fn beats(a: &str, b: &str) -> bool {
    let known = |c: &str| c != "BAD";
    if !known(a) || !known(b) {
        return false;
    }
    if a.starts_with("GW11") && b == "GS3" {
        return true;
    }
    if b.starts_with("GW11") && a == "GS3" {
        return false;
    }
    if a == "GS6" && b == "GW3E" {
        return true;
    }
    if parent(a) == Some(b) {
        return true;
    }
    if parent(b) == Some(a) {
        return false;
    }
    tier1(a) == "GS" && tier1(b) == "GW"
}

/// Indices of findings that some overlapping finding beats.
pub fn reference_suppressed(findings: &[ErrorFinding]) -> Vec<usize> {
    let whole = (0, WORDS.len());
    let ranges: Vec<(usize, usize)> = findings.iter().map(|f| word_range(&f.span).unwrap_or(whole)).collect();
    (0..findings.len())
        .filter(|&i| {
            (0..findings.len()).any(|j| {
                j != i
                    && ranges[i].0 < ranges[j].1
                    && ranges[j].0 < ranges[i].1
                    && beats(&findings[j].code_text, &findings[i].code_text)
            })
        })
        .collect()
}
