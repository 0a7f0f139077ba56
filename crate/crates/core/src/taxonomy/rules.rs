//! Hierarchy rules: ordered conflict-resolution directives carried in the
//! taxonomy metadata as free text.

use std::sync::OnceLock;

use regex::Regex;

use super::code::{ErrorCode, Tier1};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleKind {
    /// Spelling findings are ordered before all others. Suppresses nothing.
    SpellingFirst,
    /// A GS finding suppresses an overlapping GW finding.
    SyntaxOverridesWord,
    /// A tier-3 finding suppresses an overlapping finding coded with its own tier-2 parent.
    SpecificOverridesParent,
    /// Findings within `winner` suppress overlapping findings within `loser`.
    CodeSupersedesCode { winner: ErrorCode, loser: ErrorCode },
    Unrecognized,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchyRule {
    pub ordinal: u32,
    pub raw_text: String,
    pub kind: RuleKind,
}

fn ordinal_prefix() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*(\d+)\s*[.)]\s*").unwrap())
}

fn parenthesized_code() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\(\s*([A-Z]{2}[0-9]*[A-Z]?)\s*\)").unwrap())
}

fn precedence_verb() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b(overrides?|supersedes?|takes? precedence over|outranks?|beats?)\b").unwrap()
    })
}

impl HierarchyRule {
    /// Recognise a rule sentence. `position` (1-based) is used as the ordinal
    /// when the text carries no leading number.
    pub fn parse(raw_text: &str, position: u32) -> HierarchyRule {
        let (ordinal, body) = match ordinal_prefix().captures(raw_text) {
            Some(caps) => {
                let n = caps[1].parse().unwrap_or(position);
                (n, &raw_text[caps.get(0).unwrap().end()..])
            }
            None => (position, raw_text),
        };
        HierarchyRule { ordinal, raw_text: raw_text.to_string(), kind: classify(body) }
    }
}

fn classify(body: &str) -> RuleKind {
    let lower = body.to_lowercase();

    // "(GM)" in the shipped rule text is a slip for SP; only the wording matters.
    if lower.contains("spelling") && lower.contains("first") {
        return RuleKind::SpellingFirst;
    }
    if lower.contains("specific") && lower.contains("parent") {
        return RuleKind::SpecificOverridesParent;
    }

    // "<winner> (CODE) <verb> <loser> (CODE)"
    let codes: Vec<(usize, ErrorCode)> = parenthesized_code()
        .captures_iter(body)
        .filter_map(|c| Some((c.get(0)?.start(), ErrorCode::parse_any(&c[1]).ok()?)))
        .collect();
    let Some(verb) = precedence_verb().find(body) else {
        return RuleKind::Unrecognized;
    };
    match codes.as_slice() {
        [(w_at, winner), (l_at, loser)] if *w_at < verb.start() && verb.end() <= *l_at => {
            if *winner == ErrorCode::root(Tier1::GS) && *loser == ErrorCode::root(Tier1::GW) {
                RuleKind::SyntaxOverridesWord
            } else {
                RuleKind::CodeSupersedesCode { winner: *winner, loser: *loser }
            }
        }
        _ => RuleKind::Unrecognized,
    }
}
