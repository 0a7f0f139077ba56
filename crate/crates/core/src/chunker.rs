//! Sentence chunking of plain-text documents.
//!
//! Each line is segmented independently: a line break always ends a sentence.
//! A line opening with a label such as `Title:` or `C:` has the label removed
//! from the text and recorded as the chunk's speaker.

use std::sync::OnceLock;

use regex::Regex;
use serde::Serialize;

/// One sentence of input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Chunk {
    pub index: usize,
    pub text: String,
    pub speaker: Option<String>,
    /// 1-based.
    pub source_line: usize,
    /// 0-based character offset of the sentence within its line.
    pub source_offset: usize,
}

#[derive(Debug, Clone)]
pub struct SegmenterConfig {
    /// Tokens ending in '.' that never end a sentence.
    pub abbreviations: Vec<String>,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        SegmenterConfig {
            abbreviations: ["Mr.", "Mrs.", "Dr.", "e.g.", "i.e."].iter().map(|s| s.to_string()).collect(),
        }
    }
}

fn speaker_label() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*([A-Za-z]+):(?:\s|$)").unwrap())
}

const CLOSERS: &[char] = &['"', '\'', '\u{201D}', '\u{2019}', ')', ']'];

pub fn chunk_text(document: &str) -> Vec<Chunk> {
    chunk_text_with(document, &SegmenterConfig::default())
}

pub fn chunk_text_with(document: &str, config: &SegmenterConfig) -> Vec<Chunk> {
    let document = document.replace("\r\n", "\n").replace('\r', "\n");
    let mut chunks = Vec::new();
    for (line_no, line) in document.split('\n').enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let (speaker, body_start) = match speaker_label().captures(line) {
            Some(caps) => {
                let end_byte = caps.get(0).unwrap().end();
                (Some(caps[1].to_string()), line[..end_byte].chars().count())
            }
            None => (None, 0),
        };
        for (start, end) in split_sentences(&chars, body_start, config) {
            let raw: String = chars[start..end].iter().collect();
            let lead = raw.chars().take_while(|c| c.is_whitespace()).count();
            let text = raw.trim();
            if text.is_empty() {
                continue;
            }
            chunks.push(Chunk {
                index: chunks.len(),
                text: text.to_string(),
                speaker: speaker.clone(),
                source_line: line_no + 1,
                source_offset: start + lead,
            });
        }
    }
    chunks
}

/// Character ranges of sentences in `chars[from..]`.
fn split_sentences(chars: &[char], from: usize, config: &SegmenterConfig) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = from;
    let mut i = from;
    while i < chars.len() {
        if !matches!(chars[i], '.' | '?' | '!') {
            i += 1;
            continue;
        }
        let run_start = i;
        while i < chars.len() && matches!(chars[i], '.' | '?' | '!') {
            i += 1;
        }
        let run = &chars[run_start..i];
        while i < chars.len() && CLOSERS.contains(&chars[i]) {
            i += 1;
        }
        let at_break = i == chars.len() || chars[i].is_whitespace();
        if !at_break || is_ellipsis(run) {
            continue;
        }
        if run.last() == Some(&'.') && ends_with_abbreviation(&chars[start..run_start + run.len()], config) {
            continue;
        }
        if run.iter().any(|&c| c == '?' || c == '!') {
            let next = chars[i..].iter().find(|c| !c.is_whitespace());
            if next.is_some_and(|c| c.is_lowercase()) {
                continue;
            }
        }
        out.push((start, i));
        start = i;
    }
    if chars[start.min(chars.len())..].iter().any(|c| !c.is_whitespace()) {
        out.push((start, chars.len()));
    }
    out
}

fn is_ellipsis(run: &[char]) -> bool {
    run.len() >= 2 && run.iter().all(|&c| c == '.')
}

fn ends_with_abbreviation(sentence: &[char], config: &SegmenterConfig) -> bool {
    let token_start = sentence.iter().rposition(|c| c.is_whitespace()).map_or(0, |p| p + 1);
    let token: String = sentence[token_start..].iter().collect();
    let token = token.trim_start_matches(['(', '"', '\'', '\u{201C}', '\u{2018}']);
    config.abbreviations.iter().any(|a| a == token)
}

/// Collapse whitespace runs to one space and trim. Nothing else changes.
pub fn normalize_sentence(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}
