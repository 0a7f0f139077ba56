//! Checks finding codes against the taxonomy and applies its hierarchy rules
//! to findings whose spans overlap.

use std::collections::HashSet;
use std::ops::Range;

use serde::Serialize;

use crate::parser::{AnalysisRecord, CodeStatus, ErrorFinding};
use crate::taxonomy::{ErrorCode, HierarchyRule, RuleKind, Taxonomy, Tier1};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CodeStatusReport {
    pub ordinal: u32,
    pub code_text: String,
    pub status: CodeStatus,
    /// For unknown codes: the tier-2 parent, when the taxonomy has it.
    pub nearest_known: Option<ErrorCode>,
    /// The code exists but the explanation shares too little with its entry.
    pub label_drift: bool,
}

#[derive(Debug, Clone)]
pub struct DriftConfig {
    /// Fewer shared content tokens than this counts as drift.
    pub min_shared_tokens: usize,
    pub stopwords: HashSet<String>,
}

const STOPWORDS: &[&str] = &[
    "a", "an", "the", "of", "to", "in", "on", "at", "for", "with", "by", "from", "into", "as", "and", "or", "but",
    "nor", "is", "are", "was", "were", "be", "been", "being", "it", "its", "this", "that", "these", "those", "not",
    "no", "should", "would", "can", "could", "will", "there", "here", "than", "then", "which", "who", "what", "where",
    "when", "e", "g", "s", "t", "eg", "ie", "etc", "between", "before", "after", "about", "error", "errors",
    "incorrect", "wrong",
];

impl Default for DriftConfig {
    fn default() -> Self {
        DriftConfig { min_shared_tokens: 1, stopwords: STOPWORDS.iter().map(|s| s.to_string()).collect() }
    }
}

impl DriftConfig {
    fn content_tokens(&self, text: &str) -> HashSet<String> {
        text.to_lowercase()
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty() && !self.stopwords.contains(*t))
            .map(str::to_string)
            .collect()
    }
}

pub fn classify_code_status(tax: &Taxonomy, finding: &ErrorFinding) -> CodeStatusReport {
    classify_code_status_with(tax, finding, &DriftConfig::default())
}

pub fn classify_code_status_with(tax: &Taxonomy, finding: &ErrorFinding, drift: &DriftConfig) -> CodeStatusReport {
    let mut report = CodeStatusReport {
        ordinal: finding.ordinal,
        code_text: finding.code_text.clone(),
        status: CodeStatus::MalformedCode,
        nearest_known: None,
        label_drift: false,
    };
    let Some(code) = finding.code else {
        return report;
    };
    match tax.lookup(&code) {
        Some(node) => {
            report.status = CodeStatus::Known;
            let entry = drift.content_tokens(&format!("{} {}", node.name, node.description));
            let shared = drift.content_tokens(&finding.explanation).intersection(&entry).count();
            report.label_drift = shared < drift.min_shared_tokens;
        }
        None => {
            report.status = CodeStatus::UnknownCode;
            report.nearest_known = code.tier2_code().filter(|t2| *t2 != code && tax.contains(t2));
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Suppression {
    pub finding: ErrorFinding,
    pub winner: ErrorFinding,
    /// Ordinal of the rule as numbered in the taxonomy.
    pub rule: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ResolutionOutcome {
    /// Spelling findings first (when the taxonomy says so), then input order.
    pub kept: Vec<ErrorFinding>,
    pub suppressed: Vec<Suppression>,
}

impl ResolutionOutcome {
    /// Every input finding in output order, losers annotated with their rule
    /// and ordinals renumbered by position.
    pub fn annotated(&self, spelling_first: bool) -> Vec<ErrorFinding> {
        let mut all: Vec<ErrorFinding> = self.kept.clone();
        for s in &self.suppressed {
            let mut f = s.finding.clone();
            f.suppressed_by = Some(s.rule);
            all.push(f);
        }
        sort_for_output(&mut all, spelling_first);
        for (i, f) in all.iter_mut().enumerate() {
            f.ordinal = i as u32 + 1;
        }
        all
    }
}

fn is_spelling(f: &ErrorFinding) -> bool {
    f.code.is_some_and(|c| c.tier1() == Tier1::SP)
}

fn sort_for_output(findings: &mut [ErrorFinding], spelling_first: bool) {
    findings.sort_by_key(|f| (spelling_first && !is_spelling(f), f.ordinal));
}

/// Character range of `span` in `text`: the leftmost verbatim occurrence, or
/// the whole sentence when it does not occur.
pub fn locate_span(text: &str, span: &str) -> Range<usize> {
    match text.find(span) {
        Some(start) if !span.is_empty() => start..start + span.len(),
        _ => 0..text.len(),
    }
}

fn overlaps(a: &Range<usize>, b: &Range<usize>) -> bool {
    a.start < b.end && b.start < a.end
}

fn specificity(kind: &RuleKind) -> u8 {
    match kind {
        RuleKind::CodeSupersedesCode { .. } => 3,
        RuleKind::SpecificOverridesParent => 2,
        RuleKind::SyntaxOverridesWord => 1,
        RuleKind::SpellingFirst | RuleKind::Unrecognized => 0,
    }
}

/// Does `rule` make `winner` beat `loser`?
fn rule_applies(kind: &RuleKind, winner: &ErrorCode, loser: &ErrorCode) -> bool {
    match kind {
        RuleKind::SyntaxOverridesWord => winner.tier1() == Tier1::GS && loser.tier1() == Tier1::GW,
        RuleKind::SpecificOverridesParent => winner.depth() == 3 && loser.is_parent_of(winner),
        RuleKind::CodeSupersedesCode { winner: w, loser: l } => winner.is_within(w) && loser.is_within(l),
        RuleKind::SpellingFirst | RuleKind::Unrecognized => false,
    }
}

/// For two overlapping codes, the rule that decides between them and whether
/// `a` is the winner. The most specific applicable rule decides; among equally
/// specific rules the first listed wins.
fn decide<'r>(rules: &'r [HierarchyRule], a: &ErrorCode, b: &ErrorCode) -> Option<(&'r HierarchyRule, bool)> {
    let mut best: Option<(&HierarchyRule, bool)> = None;
    for rule in rules {
        let a_wins = rule_applies(&rule.kind, a, b);
        let b_wins = rule_applies(&rule.kind, b, a);
        if !a_wins && !b_wins {
            continue;
        }
        if best.map_or(true, |(r, _)| specificity(&rule.kind) > specificity(&r.kind)) {
            best = Some((rule, a_wins));
        }
    }
    best
}

pub fn spelling_first(tax: &Taxonomy) -> bool {
    tax.metadata().hierarchy_rules.iter().any(|r| r.kind == RuleKind::SpellingFirst)
}

pub fn resolve_conflicts(tax: &Taxonomy, record: &AnalysisRecord) -> ResolutionOutcome {
    let rules = &tax.metadata().hierarchy_rules;
    let findings = &record.findings;
    let spans: Vec<Range<usize>> = findings.iter().map(|f| locate_span(&record.original_text, &f.span)).collect();

    // (rule list position, winner index, rule ordinal) of the strongest defeat per finding
    let mut defeats: Vec<Option<(usize, usize, u32)>> = vec![None; findings.len()];
    for i in 0..findings.len() {
        for j in i + 1..findings.len() {
            let (Some(a), Some(b)) = (findings[i].code, findings[j].code) else {
                continue;
            };
            if !overlaps(&spans[i], &spans[j]) {
                continue;
            }
            let Some((rule, a_wins)) = decide(rules, &a, &b) else {
                continue;
            };
            let (winner, loser) = if a_wins { (i, j) } else { (j, i) };
            let position = rules.iter().position(|r| std::ptr::eq(r, rule)).unwrap();
            let candidate = (position, winner, rule.ordinal);
            let slot = &mut defeats[loser];
            let better = match slot {
                None => true,
                Some((p, w, _)) => (position, findings[winner].ordinal) < (*p, findings[*w].ordinal),
            };
            if better {
                *slot = Some(candidate);
            }
        }
    }

    let mut outcome = ResolutionOutcome::default();
    for (i, f) in findings.iter().enumerate() {
        let mut f = f.clone();
        f.suppressed_by = None;
        match defeats[i] {
            None => outcome.kept.push(f),
            Some((_, w, rule)) => {
                let mut winner = findings[w].clone();
                winner.suppressed_by = None;
                outcome.suppressed.push(Suppression { finding: f, winner, rule });
            }
        }
    }
    sort_for_output(&mut outcome.kept, spelling_first(tax));
    outcome
}

/// Classify every code, resolve conflicts and return the record in output
/// form together with the per-finding status reports.
pub fn resolve_record(tax: &Taxonomy, record: &AnalysisRecord) -> (AnalysisRecord, ResolutionOutcome, Vec<CodeStatusReport>) {
    let mut classified = record.clone();
    let reports: Vec<CodeStatusReport> = record.findings.iter().map(|f| classify_code_status(tax, f)).collect();
    for (f, r) in classified.findings.iter_mut().zip(&reports) {
        f.code_status = Some(r.status);
    }
    let outcome = resolve_conflicts(tax, &classified);
    classified.findings = outcome.annotated(spelling_first(tax));
    (classified, outcome, reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_finding_line;
    use crate::taxonomy::{load_taxonomy, parse_code};

    const SEED: &str = include_str!("../../../fixtures/seed_taxonomy.json");

    fn seed() -> Taxonomy {
        load_taxonomy(SEED).unwrap()
    }

    fn finding(ordinal: u32, code: &str, span: &str, explanation: &str) -> ErrorFinding {
        let suffix = crate::parser::ordinal_suffix(ordinal);
        parse_finding_line(&format!("{ordinal}{suffix} Error & Reason: {code}, {span}, {explanation}"), ordinal).unwrap()
    }

    fn record(ot: &str, findings: Vec<ErrorFinding>) -> AnalysisRecord {
        AnalysisRecord {
            original_text: ot.into(),
            corrected_text: ot.into(),
            no_errors_declared: findings.is_empty(),
            findings,
            analysis_failed: false,
        }
    }

    #[test]
    fn known_code_matching_its_entry() {
        let r = classify_code_status(&seed(), &finding(1, "GW1A", "this", "demonstrative lacks a clear antecedent"));
        assert_eq!(r.status, CodeStatus::Known);
        assert!(!r.label_drift);
    }

    #[test]
    fn renamed_known_code_drifts() {
        let r = classify_code_status(&seed(), &finding(1, "GW11A", "will first to see", "incorrect modal construction with 'to'"));
        assert_eq!(r.status, CodeStatus::Known);
        assert!(r.label_drift);
    }

    #[test]
    fn unknown_codes_and_nearest_parent() {
        let tax = seed();
        let r = classify_code_status(&tax, &finding(1, "GW14A", "x", "y"));
        assert_eq!(r.status, CodeStatus::UnknownCode);
        assert_eq!(r.nearest_known, None);
        let r = classify_code_status(&tax, &finding(1, "GW11C", "x", "y"));
        assert_eq!(r.status, CodeStatus::UnknownCode);
        assert_eq!(r.nearest_known, Some(parse_code("GW11").unwrap()));
        let r = classify_code_status(&tax, &finding(1, "GW9", "x", "y"));
        assert_eq!((r.status, r.nearest_known), (CodeStatus::UnknownCode, None));
        let r = classify_code_status(&tax, &finding(1, "G-W1", "x", "y"));
        assert_eq!((r.status, r.nearest_known, r.label_drift), (CodeStatus::MalformedCode, None, false));
    }

    #[test]
    fn punctuation_supersedes_possessive() {
        let rec = record(
            "Admire this master piece gothic architecture's.",
            vec![finding(1, "GW3E", "architecture's", "possessive"), finding(2, "GS6", "architecture's", "apostrophe")],
        );
        let out = resolve_conflicts(&seed(), &rec);
        assert_eq!(out.kept.len(), 1);
        assert_eq!(out.kept[0].code_text, "GS6");
        assert_eq!(out.suppressed.len(), 1);
        assert_eq!(out.suppressed[0].finding.code_text, "GW3E");
        assert_eq!(out.suppressed[0].winner.code_text, "GS6");
        assert_eq!(out.suppressed[0].rule, 4);
    }

    #[test]
    fn modal_overrides_tense_despite_syntax_rule() {
        let rec = record(
            "after we shall go in there",
            vec![finding(1, "GW11A", "shall go", "modal"), finding(2, "GS3", "shall go", "tense")],
        );
        let out = resolve_conflicts(&seed(), &rec);
        assert_eq!(out.kept.iter().map(|f| f.code_text.as_str()).collect::<Vec<_>>(), ["GW11A"]);
        assert_eq!(out.suppressed[0].finding.code_text, "GS3");
        assert_eq!(out.suppressed[0].rule, 5);
    }

    #[test]
    fn syntax_and_parent_rules() {
        let tax = seed();
        let rec = record("the cat sat", vec![finding(1, "GW7A", "the cat", "a"), finding(2, "GS2A", "cat sat", "b")]);
        let out = resolve_conflicts(&tax, &rec);
        assert_eq!(out.suppressed[0].finding.code_text, "GW7A");
        assert_eq!(out.suppressed[0].rule, 2);

        let rec = record("the cat sat", vec![finding(1, "GW4", "cat", "a"), finding(2, "GW4B", "cat", "b")]);
        let out = resolve_conflicts(&tax, &rec);
        assert_eq!(out.suppressed[0].finding.code_text, "GW4");
        assert_eq!(out.suppressed[0].rule, 3);
    }

    #[test]
    fn disjoint_spans_are_untouched() {
        let rec = record("the cat sat", vec![finding(1, "GW7A", "the", "a"), finding(2, "GS2A", "sat", "b")]);
        let out = resolve_conflicts(&seed(), &rec);
        assert_eq!(out.kept.len(), 2);
        assert!(out.suppressed.is_empty());
    }

    #[test]
    fn single_finding_is_kept() {
        let rec = record("x y", vec![finding(1, "GS6", "x", "a")]);
        let out = resolve_conflicts(&seed(), &rec);
        assert_eq!(out.kept, rec.findings);
        assert!(out.suppressed.is_empty());
    }

    #[test]
    fn spelling_goes_first_without_suppressing() {
        let rec = record("I folget it", vec![finding(1, "GS2E", "I folget", "a"), finding(2, "SP1A", "folget", "b")]);
        let out = resolve_conflicts(&seed(), &rec);
        assert_eq!(out.kept.iter().map(|f| f.code_text.as_str()).collect::<Vec<_>>(), ["SP1A", "GS2E"]);
        let annotated = out.annotated(true);
        assert_eq!(annotated.iter().map(|f| f.ordinal).collect::<Vec<_>>(), [1, 2]);
    }

    #[test]
    fn missing_span_covers_the_sentence() {
        assert_eq!(locate_span("I shall not folget nothing", "not...nothing"), 0..26);
        assert_eq!(locate_span("a b a", "a"), 0..1);
        let rec = record(
            "I shall not folget nothing what can to merit",
            vec![finding(1, "GW6A", "what", "a"), finding(2, "GS2E", "not...nothing", "b")],
        );
        let out = resolve_conflicts(&seed(), &rec);
        assert_eq!(out.suppressed.len(), 1);
        assert_eq!(out.suppressed[0].finding.code_text, "GW6A");
    }

    #[test]
    fn malformed_codes_never_conflict() {
        let rec = record("x y", vec![finding(1, "BAD", "x", "a"), finding(2, "GS6", "x", "b")]);
        assert!(resolve_conflicts(&seed(), &rec).suppressed.is_empty());
    }
}
