//! Structured error codes such as `GW1A`, `GS2` or `SP`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Top tier of the taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tier1 {
    /// Word-level grammar.
    GW,
    /// Sentence-level grammar.
    GS,
    /// Spelling.
    SP,
}

impl Tier1 {
    pub const ALL: [Tier1; 3] = [Tier1::GW, Tier1::GS, Tier1::SP];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier1::GW => "GW",
            Tier1::GS => "GS",
            Tier1::SP => "SP",
        }
    }

    /// Display name used for the tier-1 nodes, which carry no name in the
    /// taxonomy document itself.
    pub fn display_name(self) -> &'static str {
        match self {
            Tier1::GW => "Grammar Words",
            Tier1::GS => "Grammar Sentences",
            Tier1::SP => "Spelling",
        }
    }

    pub fn default_description(self) -> &'static str {
        match self {
            Tier1::GW => "Grammatical errors confined to individual words or word classes.",
            Tier1::GS => "Grammatical errors in the structure of clauses and sentences, including punctuation.",
            Tier1::SP => "Mechanical errors in how letters are arranged or formed.",
        }
    }

    fn from_prefix(s: &str) -> Option<Tier1> {
        match s {
            "GW" => Some(Tier1::GW),
            "GS" => Some(Tier1::GS),
            "SP" => Some(Tier1::SP),
            _ => None,
        }
    }
}

impl fmt::Display for Tier1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed error code {text:?}: {reason}")]
pub struct MalformedCode {
    pub text: String,
    pub reason: &'static str,
}

/// An error code at any depth of the taxonomy.
///
/// Codes found in model output always carry a tier-2 index; tier-1 only codes
/// (`GW`) exist for taxonomy roots and hierarchy rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ErrorCode {
    tier1: Tier1,
    tier2: Option<u32>,
    tier3: Option<char>,
}

impl ErrorCode {
    pub fn root(tier1: Tier1) -> Self {
        ErrorCode { tier1, tier2: None, tier3: None }
    }

    /// Panics if `tier2` is zero or `tier3` is not an ASCII uppercase letter.
    pub fn new(tier1: Tier1, tier2: u32, tier3: Option<char>) -> Self {
        assert!(tier2 >= 1, "tier-2 index must be positive");
        if let Some(c) = tier3 {
            assert!(c.is_ascii_uppercase(), "tier-3 must be an uppercase letter");
        }
        ErrorCode { tier1, tier2: Some(tier2), tier3 }
    }

    pub fn tier1(&self) -> Tier1 {
        self.tier1
    }

    pub fn tier2(&self) -> Option<u32> {
        self.tier2
    }

    pub fn tier3(&self) -> Option<char> {
        self.tier3
    }

    /// 1, 2 or 3.
    pub fn depth(&self) -> usize {
        match (self.tier2, self.tier3) {
            (None, _) => 1,
            (Some(_), None) => 2,
            (Some(_), Some(_)) => 3,
        }
    }

    pub fn parent(&self) -> Option<ErrorCode> {
        match (self.tier2, self.tier3) {
            (None, _) => None,
            (Some(_), None) => Some(ErrorCode::root(self.tier1)),
            (Some(t2), Some(_)) => Some(ErrorCode { tier1: self.tier1, tier2: Some(t2), tier3: None }),
        }
    }

    /// The tier-2 code this code belongs to, if it has one.
    pub fn tier2_code(&self) -> Option<ErrorCode> {
        self.tier2.map(|t2| ErrorCode { tier1: self.tier1, tier2: Some(t2), tier3: None })
    }

    /// True when `self` equals `ancestor` or lies below it.
    pub fn is_within(&self, ancestor: &ErrorCode) -> bool {
        if self.tier1 != ancestor.tier1 {
            return false;
        }
        if ancestor.tier2.is_some() && ancestor.tier2 != self.tier2 {
            return false;
        }
        ancestor.tier3.is_none() || ancestor.tier3 == self.tier3
    }

    /// True when `self` is the parent of `child`.
    pub fn is_parent_of(&self, child: &ErrorCode) -> bool {
        child.parent().as_ref() == Some(self)
    }

    /// Parse a code at any depth (`GW`, `GW1`, `GW1A`).
    pub fn parse_any(text: &str) -> Result<ErrorCode, MalformedCode> {
        let bad = |reason| MalformedCode { text: text.to_string(), reason };
        let prefix = text.get(..2).ok_or_else(|| bad("too short"))?;
        let tier1 = Tier1::from_prefix(prefix).ok_or_else(|| bad("prefix must be GW, GS or SP"))?;
        let rest = &text[2..];
        if rest.is_empty() {
            return Ok(ErrorCode::root(tier1));
        }
        let digits_end = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
        let (digits, tail) = rest.split_at(digits_end);
        if digits.is_empty() {
            return Err(bad("missing tier-2 digits"));
        }
        if digits.starts_with('0') {
            return Err(bad("tier-2 index must be positive without leading zeros"));
        }
        let tier2: u32 = digits.parse().map_err(|_| bad("tier-2 index out of range"))?;
        let mut chars = tail.chars();
        let tier3 = match chars.next() {
            None => None,
            Some(c) if c.is_ascii_uppercase() => Some(c),
            Some(c) if c.is_ascii_lowercase() => return Err(bad("tier-3 letter must be uppercase")),
            Some(_) => return Err(bad("unexpected character after tier-2 index")),
        };
        if chars.next().is_some() {
            return Err(bad("trailing characters after tier-3 letter"));
        }
        Ok(ErrorCode { tier1, tier2: Some(tier2), tier3 })
    }
}

/// Parse a finding code: `(GW|GS|SP)` + digits + optional uppercase letter.
pub fn parse_code(text: &str) -> Result<ErrorCode, MalformedCode> {
    let code = ErrorCode::parse_any(text)?;
    if code.tier2.is_none() {
        return Err(MalformedCode { text: text.to_string(), reason: "missing tier-2 digits" });
    }
    Ok(code)
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tier1.as_str())?;
        if let Some(t2) = self.tier2 {
            write!(f, "{t2}")?;
        }
        if let Some(t3) = self.tier3 {
            write!(f, "{t3}")?;
        }
        Ok(())
    }
}

impl FromStr for ErrorCode {
    type Err = MalformedCode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ErrorCode::parse_any(s)
    }
}

impl Serialize for ErrorCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ErrorCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        ErrorCode::parse_any(&s).map_err(serde::de::Error::custom)
    }
}
