//! The shipped test corpus and its integrity check.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::backend::parse_fixtures;
use crate::chunker::{chunk_text, normalize_sentence};
use crate::parser::{parse_response, render_records};
use crate::scorer::{parse_gold, VerdictTally};
use crate::taxonomy::{load_taxonomy, Diagnostic, DiagnosticKind, Severity, Taxonomy};

pub const SEED_TAXONOMY: &str = "seed_taxonomy.json";
pub const DIALOGUE16_INPUT: &str = "dialogue16.txt";
pub const DIALOGUE16_FULL: &str = "dialogue16_full.txt";
pub const DIALOGUE16_RESPONSES: &str = "dialogue16_responses.json";
pub const DIALOGUE16_RAW: &str = "dialogue16_raw.txt";
pub const GOLDEN_OUTPUT: &str = "golden_output.txt";
pub const DIALOGUE16_GOLD: &str = "dialogue16_gold.json";

pub const EXPECTED_RECORDS: usize = 8;
pub const EXPECTED_FINDINGS: usize = 25;
/// Correct, partial, incorrect.
pub const EXPECTED_VERDICTS: (usize, usize, usize) = (27, 3, 2);

/// Contents of the fixture files.
#[derive(Debug, Clone)]
pub struct FixtureSet {
    pub seed_taxonomy: String,
    pub dialogue16_input: String,
    pub dialogue16_full: String,
    pub dialogue16_responses: String,
    pub dialogue16_raw: String,
    pub golden_output: String,
    pub dialogue16_gold: String,
}

impl FixtureSet {
    /// Read every fixture file under `dir`; unreadable files are reported
    /// by name.
    pub fn load(dir: &Path) -> Result<FixtureSet, Vec<Diagnostic>> {
        let mut problems = Vec::new();
        let mut read = |name: &str| match std::fs::read_to_string(dir.join(name)) {
            Ok(text) => text,
            Err(e) => {
                problems.push(fixture_error(name, format!("cannot read: {e}")));
                String::new()
            }
        };
        let set = FixtureSet {
            seed_taxonomy: read(SEED_TAXONOMY),
            dialogue16_input: read(DIALOGUE16_INPUT),
            dialogue16_full: read(DIALOGUE16_FULL),
            dialogue16_responses: read(DIALOGUE16_RESPONSES),
            dialogue16_raw: read(DIALOGUE16_RAW),
            golden_output: read(GOLDEN_OUTPUT),
            dialogue16_gold: read(DIALOGUE16_GOLD),
        };
        if problems.is_empty() {
            Ok(set)
        } else {
            Err(problems)
        }
    }

    /// Check every corpus invariant; empty iff coherent.
    pub fn verify(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();

        let tax = match load_taxonomy(&self.seed_taxonomy) {
            Ok(tax) => {
                out.extend(tax.validate().into_iter().filter(|d| d.severity == Severity::Error));
                Some(tax)
            }
            Err(e) => {
                out.push(fixture_error(SEED_TAXONOMY, e.to_string()));
                None
            }
        };

        let chunks: Vec<String> = chunk_text(&self.dialogue16_input).into_iter().map(|c| normalize_sentence(&c.text)).collect();
        if chunks.len() != EXPECTED_RECORDS {
            out.push(fixture_error(DIALOGUE16_INPUT, format!("{} sentences, expected {EXPECTED_RECORDS}", chunks.len())));
        }
        if !self.dialogue16_full.contains(self.dialogue16_input.trim_end()) {
            out.push(fixture_error(DIALOGUE16_FULL, "does not contain the excerpt"));
        }

        self.check_responses(&chunks, &mut out);
        self.check_records(DIALOGUE16_RAW, &self.dialogue16_raw, &mut out);
        self.check_records(GOLDEN_OUTPUT, &self.golden_output, &mut out);
        self.check_gold(&chunks, tax.as_ref(), &mut out);
        out
    }

    fn check_responses(&self, chunks: &[String], out: &mut Vec<Diagnostic>) {
        let responses = match parse_fixtures(&self.dialogue16_responses) {
            Ok(map) => map,
            Err(e) => {
                out.push(fixture_error(DIALOGUE16_RESPONSES, e.to_string()));
                return;
            }
        };
        let mut unclaimed: HashMap<&str, &str> = responses.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        for sentence in chunks {
            let Some(raw) = unclaimed.remove(sentence.as_str()) else {
                out.push(fixture_error(DIALOGUE16_RESPONSES, format!("no entry for {sentence:?}")));
                continue;
            };
            match parse_response(raw) {
                Ok(recs) if recs.iter().any(|r| normalize_sentence(&r.original_text) == *sentence) => {}
                Ok(_) => out.push(fixture_error(DIALOGUE16_RESPONSES, format!("response for {sentence:?} does not echo it"))),
                Err(e) => out.push(fixture_error(DIALOGUE16_RESPONSES, format!("response for {sentence:?}: {e}"))),
            }
        }
        let mut extra: Vec<&str> = unclaimed.into_keys().collect();
        extra.sort_unstable();
        for key in extra {
            out.push(fixture_error(DIALOGUE16_RESPONSES, format!("entry {key:?} matches no input sentence")));
        }
    }

    fn check_records(&self, name: &str, text: &str, out: &mut Vec<Diagnostic>) {
        let records = match parse_response(text) {
            Ok(r) => r,
            Err(e) => {
                out.push(fixture_error(name, e.to_string()));
                return;
            }
        };
        let findings: usize = records.iter().map(|r| r.findings.len()).sum();
        if records.len() != EXPECTED_RECORDS || findings != EXPECTED_FINDINGS {
            out.push(fixture_error(
                name,
                format!("{} records and {findings} findings, expected {EXPECTED_RECORDS} and {EXPECTED_FINDINGS}", records.len()),
            ));
        }
        if name == GOLDEN_OUTPUT && render_records(&records) != text {
            out.push(fixture_error(name, "re-rendering the parsed records changes the text"));
        }
    }

    fn check_gold(&self, chunks: &[String], tax: Option<&Taxonomy>, out: &mut Vec<Diagnostic>) {
        let gold = match parse_gold(&self.dialogue16_gold) {
            Ok(g) => g,
            Err(e) => {
                out.push(fixture_error(DIALOGUE16_GOLD, e.to_string()));
                return;
            }
        };
        let sentences: Vec<&str> = gold.iter().map(|g| g.sentence.as_str()).collect();
        if sentences != chunks.iter().map(String::as_str).collect::<Vec<_>>() {
            out.push(fixture_error(DIALOGUE16_GOLD, "sentences differ from the input's chunks"));
        }
        if let Some(tax) = tax {
            for entry in &gold {
                for code in entry.expected_codes.iter().filter(|c| !tax.contains(c)) {
                    out.push(fixture_error(DIALOGUE16_GOLD, format!("{code} in {:?} is not in the seed taxonomy", entry.sentence)));
                }
            }
        }
        let tally = VerdictTally::from_verdicts(gold.iter().filter_map(|g| g.verdicts.as_ref()).flatten());
        if (tally.correct, tally.partial, tally.incorrect) != EXPECTED_VERDICTS {
            out.push(fixture_error(
                DIALOGUE16_GOLD,
                format!("verdicts tally {}/{}/{}, expected {:?}", tally.correct, tally.partial, tally.incorrect, EXPECTED_VERDICTS),
            ));
        }
    }
}

fn fixture_error(file: &str, message: impl Into<String>) -> Diagnostic {
    Diagnostic::error(DiagnosticKind::Fixture, Some(file), message)
}

/// Load and check the fixture directory.
pub fn verify_fixture_integrity(dir: &Path) -> Vec<Diagnostic> {
    match FixtureSet::load(dir) {
        Ok(set) => set.verify(),
        Err(problems) => problems,
    }
}

/// The `fixtures/` directory at the workspace root.
pub fn default_fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}
