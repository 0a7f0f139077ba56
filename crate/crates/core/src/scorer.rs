//! Compares predicted finding codes with gold annotations and tallies expert
//! verdicts.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chunker::normalize_sentence;
use crate::parser::AnalysisRecord;
use crate::taxonomy::{parse_code, ErrorCode};

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("cannot read {path}: {source}")]
    Unreadable { path: PathBuf, source: std::io::Error },
    #[error("malformed gold file: {0}")]
    MalformedGold(String),
    #[error("gold file lists {0:?} twice")]
    DuplicateSentence(String),
    #[error("gold sentence {0:?} has no prediction")]
    SentenceMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchClass {
    ExactT3,
    T2Match,
    T1Match,
    Outlier,
    MissingGold,
    Spurious,
}

impl MatchClass {
    pub const ALL: [MatchClass; 6] = [
        MatchClass::ExactT3,
        MatchClass::T2Match,
        MatchClass::T1Match,
        MatchClass::Outlier,
        MatchClass::MissingGold,
        MatchClass::Spurious,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MatchClass::ExactT3 => "exact_t3",
            MatchClass::T2Match => "t2_match",
            MatchClass::T1Match => "t1_match",
            MatchClass::Outlier => "outlier",
            MatchClass::MissingGold => "missing_gold",
            MatchClass::Spurious => "spurious",
        }
    }
}

pub fn classify_match(predicted: &ErrorCode, gold: &ErrorCode) -> MatchClass {
    if predicted == gold {
        MatchClass::ExactT3
    } else if predicted.tier1() != gold.tier1() {
        MatchClass::Outlier
    } else if predicted.tier2().is_some() && predicted.tier2() == gold.tier2() {
        MatchClass::T2Match
    } else {
        MatchClass::T1Match
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlignedPair {
    pub class: MatchClass,
    /// Code text as predicted; absent for `MissingGold`.
    pub predicted: Option<String>,
    pub gold: Option<ErrorCode>,
}

/// Greedy tiered alignment: exact pairs first, then T2, then T1, each
/// leftmost-first. Leftovers pair up as outliers; whatever still remains is
/// spurious (predicted side) or missing (gold side).
pub fn align_findings(predicted: &[ErrorCode], gold: &[ErrorCode]) -> Vec<AlignedPair> {
    let mut p_used = vec![false; predicted.len()];
    let mut g_used = vec![false; gold.len()];
    let mut pairs = Vec::new();
    for tier in [MatchClass::ExactT3, MatchClass::T2Match, MatchClass::T1Match] {
        for (pi, p) in predicted.iter().enumerate() {
            if p_used[pi] {
                continue;
            }
            let hit = gold.iter().enumerate().position(|(gi, g)| !g_used[gi] && classify_match(p, g) == tier);
            if let Some(gi) = hit {
                p_used[pi] = true;
                g_used[gi] = true;
                pairs.push(AlignedPair { class: tier, predicted: Some(p.to_string()), gold: Some(gold[gi]) });
            }
        }
    }
    let p_left: Vec<&ErrorCode> = predicted.iter().zip(&p_used).filter(|(_, u)| !**u).map(|(c, _)| c).collect();
    let g_left: Vec<&ErrorCode> = gold.iter().zip(&g_used).filter(|(_, u)| !**u).map(|(c, _)| c).collect();
    for (p, g) in p_left.iter().zip(&g_left) {
        pairs.push(AlignedPair { class: MatchClass::Outlier, predicted: Some(p.to_string()), gold: Some(**g) });
    }
    let n = p_left.len().min(g_left.len());
    for p in &p_left[n..] {
        pairs.push(AlignedPair { class: MatchClass::Spurious, predicted: Some(p.to_string()), gold: None });
    }
    for g in &g_left[n..] {
        pairs.push(AlignedPair { class: MatchClass::MissingGold, predicted: None, gold: Some(**g) });
    }
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Correct,
    Partial,
    Incorrect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictEntry {
    pub ordinal: u32,
    pub verdict: Verdict,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldEntry {
    /// Normalized.
    pub sentence: String,
    pub expected_codes: Vec<ErrorCode>,
    pub verdicts: Option<Vec<VerdictEntry>>,
    pub note: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGold {
    sentence: String,
    expected_codes: Vec<String>,
    #[serde(default)]
    verdicts: Option<Vec<VerdictEntry>>,
    #[serde(default)]
    note: Option<String>,
}

pub fn parse_gold(text: &str) -> Result<Vec<GoldEntry>, ScoreError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let raw: Vec<RawGold> = serde_json::from_str(text).map_err(|e| ScoreError::MalformedGold(e.to_string()))?;
    let mut seen = HashSet::new();
    let mut entries = Vec::with_capacity(raw.len());
    for r in raw {
        let sentence = normalize_sentence(&r.sentence);
        if sentence.is_empty() {
            return Err(ScoreError::MalformedGold("empty sentence".into()));
        }
        if !seen.insert(sentence.clone()) {
            return Err(ScoreError::DuplicateSentence(sentence));
        }
        let expected_codes = r
            .expected_codes
            .iter()
            .map(|c| parse_code(c).map_err(|e| ScoreError::MalformedGold(format!("{sentence:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(verdicts) = &r.verdicts {
            let mut ordinals = HashSet::new();
            if let Some(v) = verdicts.iter().find(|v| !ordinals.insert(v.ordinal)) {
                return Err(ScoreError::MalformedGold(format!("{sentence:?}: verdict ordinal {} repeats", v.ordinal)));
            }
        }
        entries.push(GoldEntry { sentence, expected_codes, verdicts: r.verdicts, note: r.note });
    }
    Ok(entries)
}

pub fn load_gold(path: &Path) -> Result<Vec<GoldEntry>, ScoreError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScoreError::Unreadable { path: path.to_path_buf(), source })?;
    parse_gold(&text)
}

/// `num / den` as a percentage with one decimal, rounding ties to even.
pub fn format_percent(num: usize, den: usize) -> String {
    if den == 0 {
        return "0.0".to_string();
    }
    let scaled = num as u128 * 1000;
    let (den, mut tenths) = (den as u128, scaled / den as u128);
    let rem2 = 2 * (scaled % den);
    if rem2 > den || (rem2 == den && tenths % 2 == 1) {
        tenths += 1;
    }
    format!("{}.{}", tenths / 10, tenths % 10)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ClassCounts {
    pub exact_t3: usize,
    pub t2_match: usize,
    pub t1_match: usize,
    pub outlier: usize,
    pub missing_gold: usize,
    pub spurious: usize,
}

impl ClassCounts {
    pub fn get(&self, class: MatchClass) -> usize {
        match class {
            MatchClass::ExactT3 => self.exact_t3,
            MatchClass::T2Match => self.t2_match,
            MatchClass::T1Match => self.t1_match,
            MatchClass::Outlier => self.outlier,
            MatchClass::MissingGold => self.missing_gold,
            MatchClass::Spurious => self.spurious,
        }
    }

    fn slot(&mut self, class: MatchClass) -> &mut usize {
        match class {
            MatchClass::ExactT3 => &mut self.exact_t3,
            MatchClass::T2Match => &mut self.t2_match,
            MatchClass::T1Match => &mut self.t1_match,
            MatchClass::Outlier => &mut self.outlier,
            MatchClass::MissingGold => &mut self.missing_gold,
            MatchClass::Spurious => &mut self.spurious,
        }
    }

    pub fn add(&mut self, class: MatchClass) {
        *self.slot(class) += 1;
    }

    pub fn total(&self) -> usize {
        MatchClass::ALL.iter().map(|&c| self.get(c)).sum()
    }

    pub fn tally(pairs: &[AlignedPair]) -> Self {
        let mut counts = ClassCounts::default();
        for p in pairs {
            counts.add(p.class);
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerdictTally {
    pub correct: usize,
    pub partial: usize,
    pub incorrect: usize,
    pub total: usize,
    pub correct_pct: String,
    pub partial_pct: String,
    pub incorrect_pct: String,
}

impl VerdictTally {
    pub fn from_verdicts<'a>(verdicts: impl IntoIterator<Item = &'a VerdictEntry>) -> Self {
        let (mut correct, mut partial, mut incorrect) = (0, 0, 0);
        for v in verdicts {
            match v.verdict {
                Verdict::Correct => correct += 1,
                Verdict::Partial => partial += 1,
                Verdict::Incorrect => incorrect += 1,
            }
        }
        let total = correct + partial + incorrect;
        VerdictTally {
            correct,
            partial,
            incorrect,
            total,
            correct_pct: format_percent(correct, total),
            partial_pct: format_percent(partial, total),
            incorrect_pct: format_percent(incorrect, total),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SentenceScore {
    pub sentence: String,
    pub pairs: Vec<AlignedPair>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassRate {
    pub class: MatchClass,
    pub count: usize,
    pub pct: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScoreReport {
    pub three_class: bool,
    pub sentences: Vec<SentenceScore>,
    pub counts: ClassCounts,
    pub rates: Vec<ClassRate>,
    pub verdicts: Option<VerdictTally>,
}

impl ScoreReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.sentences.iter().enumerate() {
            writeln!(out, "Sentence {}: {}", i + 1, s.sentence).unwrap();
            if s.pairs.is_empty() {
                writeln!(out, "  (no codes)").unwrap();
            }
            for p in &s.pairs {
                let pred = p.predicted.as_deref().unwrap_or("-");
                let gold = p.gold.map_or_else(|| "-".to_string(), |g| g.to_string());
                writeln!(out, "  {:<13} {:<7} {}", p.class.as_str(), pred, gold).unwrap();
            }
        }
        writeln!(out, "\nMatch classes ({} compared):", self.counts.total()).unwrap();
        for r in &self.rates {
            writeln!(out, "  {:<13} {:>4}  {:>5}%", r.class.as_str(), r.count, r.pct).unwrap();
        }
        if let Some(v) = &self.verdicts {
            writeln!(out, "\nVerdicts ({} findings):", v.total).unwrap();
            writeln!(out, "  {:<13} {:>4}  {:>5}%", "correct", v.correct, v.correct_pct).unwrap();
            writeln!(out, "  {:<13} {:>4}  {:>5}%", "partial", v.partial, v.partial_pct).unwrap();
            writeln!(out, "  {:<13} {:>4}  {:>5}%", "incorrect", v.incorrect, v.incorrect_pct).unwrap();
        }
        out
    }
}

/// Score parsed predictions against gold. Every finding the backend emitted
/// counts, suppressed or not; malformed codes count as spurious. With
/// `three_class`, T1 matches are reported as outliers.
pub fn score_run(predictions: &[AnalysisRecord], gold: &[GoldEntry], three_class: bool) -> Result<ScoreReport, ScoreError> {
    let mut used = vec![false; predictions.len()];
    let mut sentences = Vec::with_capacity(gold.len());
    let mut counts = ClassCounts::default();
    for entry in gold {
        let hit = predictions
            .iter()
            .enumerate()
            .position(|(i, r)| !used[i] && normalize_sentence(&r.original_text) == entry.sentence)
            .ok_or_else(|| ScoreError::SentenceMismatch(entry.sentence.clone()))?;
        used[hit] = true;
        let record = &predictions[hit];
        let codes: Vec<ErrorCode> = record.findings.iter().filter_map(|f| f.code).collect();
        let mut pairs = align_findings(&codes, &entry.expected_codes);
        for f in record.findings.iter().filter(|f| f.code.is_none()) {
            pairs.push(AlignedPair { class: MatchClass::Spurious, predicted: Some(f.code_text.clone()), gold: None });
        }
        if three_class {
            for p in &mut pairs {
                if p.class == MatchClass::T1Match {
                    p.class = MatchClass::Outlier;
                }
            }
        }
        for p in &pairs {
            counts.add(p.class);
        }
        sentences.push(SentenceScore { sentence: entry.sentence.clone(), pairs });
    }
    let total = counts.total();
    let rates = MatchClass::ALL
        .iter()
        .filter(|&&c| !(three_class && c == MatchClass::T1Match))
        .map(|&class| ClassRate { class, count: counts.get(class), pct: format_percent(counts.get(class), total) })
        .collect();
    let verdicts = gold
        .iter()
        .any(|g| g.verdicts.is_some())
        .then(|| VerdictTally::from_verdicts(gold.iter().filter_map(|g| g.verdicts.as_ref()).flatten()));
    Ok(ScoreReport { three_class, sentences, counts, rates, verdicts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(s: &str) -> ErrorCode {
        parse_code(s).unwrap()
    }

    fn codes(list: &[&str]) -> Vec<ErrorCode> {
        list.iter().map(|s| c(s)).collect()
    }

    #[test]
    fn match_classes() {
        assert_eq!(classify_match(&c("GW1A"), &c("GW1A")), MatchClass::ExactT3);
        assert_eq!(classify_match(&c("GW1D"), &c("GW1B")), MatchClass::T2Match);
        assert_eq!(classify_match(&c("GW1"), &c("GW1B")), MatchClass::T2Match);
        assert_eq!(classify_match(&c("GW6A"), &c("GW5E")), MatchClass::T1Match);
        assert_eq!(classify_match(&c("GW2A"), &c("GS5")), MatchClass::Outlier);
    }

    #[test]
    fn alignment_examples() {
        let pairs = align_findings(&codes(&["SP1A", "GW5A", "GS1D", "GS2A"]), &codes(&["SP1A", "GW5A", "GS2A", "GW12A"]));
        let counts = ClassCounts::tally(&pairs);
        assert_eq!(counts.exact_t3, 3);
        assert_eq!(counts.outlier, 1);
        assert_eq!(counts.total(), 4);
        let odd = pairs.iter().find(|p| p.class != MatchClass::ExactT3).unwrap();
        assert_eq!((odd.predicted.as_deref(), odd.gold), (Some("GS1D"), Some(c("GW12A"))));

        assert!(align_findings(&[], &[]).is_empty());

        let pairs = align_findings(&codes(&["GW1A", "GW1A"]), &codes(&["GW1A"]));
        assert_eq!(pairs.iter().map(|p| p.class).collect::<Vec<_>>(), [MatchClass::ExactT3, MatchClass::Spurious]);
        let pairs = align_findings(&[], &codes(&["GS6"]));
        assert_eq!(pairs[0].class, MatchClass::MissingGold);
    }

    #[test]
    fn exact_pairs_are_not_stolen_by_earlier_near_misses() {
        let pairs = align_findings(&codes(&["GW1B", "GW1A"]), &codes(&["GW1A", "GW1B"]));
        assert_eq!(ClassCounts::tally(&pairs).exact_t3, 2);
    }

    #[test]
    fn verdict_percentages() {
        assert_eq!(format_percent(27, 32), "84.4");
        assert_eq!(format_percent(3, 32), "9.4");
        assert_eq!(format_percent(2, 32), "6.2");
        assert_eq!(format_percent(1, 3), "33.3");
        assert_eq!(format_percent(2, 3), "66.7");
        assert_eq!(format_percent(0, 0), "0.0");
        assert_eq!(format_percent(5, 5), "100.0");
        assert_eq!(format_percent(3, 80), "3.8");
    }

    #[test]
    fn gold_parsing() {
        assert!(parse_gold("").unwrap().is_empty());
        assert!(parse_gold("[]").unwrap().is_empty());
        let g = parse_gold(r#"[{"sentence": "a  b.", "expected_codes": ["GW1A"], "verdicts": [{"ordinal": 1, "verdict": "partial", "note": "n"}]}]"#).unwrap();
        assert_eq!(g[0].sentence, "a b.");
        assert_eq!(g[0].verdicts.as_ref().unwrap()[0].verdict, Verdict::Partial);
        let dup = parse_gold(r#"[{"sentence": "a.", "expected_codes": []}, {"sentence": " a.", "expected_codes": []}]"#);
        assert!(matches!(dup, Err(ScoreError::DuplicateSentence(_))));
        let bad = parse_gold(r#"[{"sentence": "a.", "expected_codes": ["G1"]}]"#);
        assert!(matches!(bad, Err(ScoreError::MalformedGold(_))));
        let rep = parse_gold(r#"[{"sentence": "a.", "expected_codes": [], "verdicts": [{"ordinal": 1, "verdict": "correct"}, {"ordinal": 1, "verdict": "correct"}]}]"#);
        assert!(matches!(rep, Err(ScoreError::MalformedGold(_))));
        assert!(matches!(parse_gold(r#"[{"sentence": "a."}]"#), Err(ScoreError::MalformedGold(_))));
    }

    fn code_strategy() -> impl Strategy<Value = ErrorCode> {
        ("(GW|GS|SP)", 1u32..4, proptest::option::of("[A-C]")).prop_map(|(t1, t2, t3)| c(&format!("{t1}{t2}{}", t3.unwrap_or_default())))
    }

    proptest! {
        #[test]
        fn identical_codes_are_exact(code in code_strategy()) {
            prop_assert_eq!(classify_match(&code, &code), MatchClass::ExactT3);
        }

        #[test]
        fn classification_is_symmetric_at_equal_depth(a in code_strategy(), b in code_strategy()) {
            prop_assume!(a.depth() == b.depth());
            prop_assert_eq!(classify_match(&a, &b), classify_match(&b, &a));
        }

        #[test]
        fn alignment_conserves_codes(p in proptest::collection::vec(code_strategy(), 0..10), g in proptest::collection::vec(code_strategy(), 0..10)) {
            let pairs = align_findings(&p, &g);
            let used_p = pairs.iter().filter(|x| x.predicted.is_some()).count();
            let used_g = pairs.iter().filter(|x| x.gold.is_some()).count();
            prop_assert_eq!(used_p, p.len());
            prop_assert_eq!(used_g, g.len());
            let mut pred_sorted: Vec<String> = pairs.iter().filter_map(|x| x.predicted.clone()).collect();
            let mut want: Vec<String> = p.iter().map(|c| c.to_string()).collect();
            pred_sorted.sort();
            want.sort();
            prop_assert_eq!(pred_sorted, want);
            for pair in &pairs {
                if let (Some(pp), Some(gg)) = (&pair.predicted, pair.gold) {
                    let expected = classify_match(&c(pp), &gg);
                    prop_assert_eq!(pair.class, expected);
                }
            }
        }
    }
}
