//! The three-tier error taxonomy: loading, serialization, lookup and validation.
//!
//! A taxonomy document is JSON of the form
//!
//! ```text
//! { "taxonomy": {
//!     "metadata": { "version", "focus", "revision_date", "hierarchy_rules": [..], "exclusion_criteria": {..} },
//!     "error categories": { "GW": { "GW1": { "name", "description", "subcategories": { "GW1A": {..} } } } }
//! } }
//! ```
//!
//! Object member order is significant and preserved: hierarchy rules apply in
//! listed order and nodes keep file order.

mod code;
mod raw;
mod rules;

use std::collections::HashMap;
use std::fmt;

use serde_json::{Map, Value};
use thiserror::Error;

pub use code::{parse_code, ErrorCode, MalformedCode, Tier1};
pub use rules::{HierarchyRule, RuleKind};

use raw::RawJson;

pub const ERROR_CATEGORIES_KEY: &str = "error categories";

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("taxonomy is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("taxonomy schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("duplicate code {0} in taxonomy")]
    DuplicateCode(String),
    #[error("hierarchy rule {ordinal} references {code}, which is not in the taxonomy")]
    DanglingRuleReference { ordinal: u32, code: String },
    #[error("unknown code {0}")]
    UnknownCode(ErrorCode),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaxonomyNode {
    pub code: ErrorCode,
    pub name: String,
    pub description: String,
    /// Required for tier-3 nodes.
    pub example: Option<String>,
    /// Placeholder entry whose name was not given by the taxonomy's authors.
    pub reconstructed: bool,
    pub children: Vec<TaxonomyNode>,
}

impl TaxonomyNode {
    pub fn root(tier1: Tier1) -> Self {
        TaxonomyNode {
            code: ErrorCode::root(tier1),
            name: tier1.display_name().to_string(),
            description: tier1.default_description().to_string(),
            example: None,
            reconstructed: false,
            children: Vec::new(),
        }
    }

    fn walk<'a>(&'a self, out: &mut Vec<&'a TaxonomyNode>) {
        out.push(self);
        for child in &self.children {
            child.walk(out);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TaxonomyMetadata {
    /// Opaque; never interpreted.
    pub version: String,
    pub focus: String,
    /// Stored verbatim. Real documents carry impossible dates such as "284-01-2025".
    pub revision_date: String,
    pub hierarchy_rules: Vec<HierarchyRule>,
    /// Free-form notes keyed by category name, in file order.
    pub exclusion_criteria: Vec<(String, String)>,
}

/// An immutable, indexed taxonomy tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Taxonomy {
    metadata: TaxonomyMetadata,
    roots: Vec<TaxonomyNode>,
    // code -> child-index path from `roots`; first occurrence wins on duplicates
    index: HashMap<ErrorCode, Vec<usize>>,
}

impl Taxonomy {
    /// Build and index a taxonomy without checking its invariants; see [`Taxonomy::validate`].
    pub fn new(metadata: TaxonomyMetadata, roots: Vec<TaxonomyNode>) -> Self {
        let mut index = HashMap::new();
        fn visit(node: &TaxonomyNode, path: &mut Vec<usize>, index: &mut HashMap<ErrorCode, Vec<usize>>) {
            index.entry(node.code).or_insert_with(|| path.clone());
            for (i, child) in node.children.iter().enumerate() {
                path.push(i);
                visit(child, path, index);
                path.pop();
            }
        }
        for (i, root) in roots.iter().enumerate() {
            visit(root, &mut vec![i], &mut index);
        }
        Taxonomy { metadata, roots, index }
    }

    pub fn metadata(&self) -> &TaxonomyMetadata {
        &self.metadata
    }

    pub fn roots(&self) -> &[TaxonomyNode] {
        &self.roots
    }

    pub fn into_parts(self) -> (TaxonomyMetadata, Vec<TaxonomyNode>) {
        (self.metadata, self.roots)
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn contains(&self, code: &ErrorCode) -> bool {
        self.index.contains_key(code)
    }

    pub fn lookup(&self, code: &ErrorCode) -> Option<&TaxonomyNode> {
        let path = self.index.get(code)?;
        let mut node = &self.roots[path[0]];
        for &i in &path[1..] {
            node = &node.children[i];
        }
        Some(node)
    }

    /// Codes from the immediate parent up to the tier-1 root.
    pub fn ancestors(&self, code: &ErrorCode) -> Result<Vec<ErrorCode>, TaxonomyError> {
        let path = self.index.get(code).ok_or(TaxonomyError::UnknownCode(*code))?;
        let mut chain = Vec::with_capacity(path.len());
        let mut node = &self.roots[path[0]];
        chain.push(node.code);
        for &i in &path[1..] {
            node = &node.children[i];
            chain.push(node.code);
        }
        chain.pop();
        chain.reverse();
        Ok(chain)
    }

    /// Every node in depth-first file order.
    pub fn nodes(&self) -> Vec<&TaxonomyNode> {
        let mut out = Vec::new();
        for root in &self.roots {
            root.walk(&mut out);
        }
        out
    }

    /// Parse a taxonomy document without enforcing invariants beyond the
    /// document's shape. Missing examples, duplicate codes and dangling rule
    /// references are left for [`Taxonomy::validate`].
    pub fn parse_unchecked(text: &str) -> Result<Taxonomy, TaxonomyError> {
        let doc: RawJson = serde_json::from_str(text)?;
        let tax = doc.get("taxonomy").ok_or_else(|| schema("$", "missing \"taxonomy\" key"))?;
        let meta = tax.get("metadata").ok_or_else(|| schema("taxonomy", "missing \"metadata\" key"))?;
        let cats = tax
            .get(ERROR_CATEGORIES_KEY)
            .ok_or_else(|| schema("taxonomy", "missing \"error categories\" key"))?;

        let metadata = parse_metadata(meta)?;
        let mut roots = Vec::new();
        for (key, value) in object(cats, "taxonomy.error categories")? {
            let path = format!("error categories.{key}");
            let code = parse_key(key, &path)?;
            if code.depth() != 1 {
                return Err(schema(&path, "top-level category keys must be GW, GS or SP"));
            }
            let mut root = TaxonomyNode::root(code.tier1());
            for (child_key, child) in object(value, &path)? {
                root.children.push(parse_node(child_key, child, &format!("{path}.{child_key}"), 2)?);
            }
            roots.push(root);
        }
        Ok(Taxonomy::new(metadata, roots))
    }

    /// Render the taxonomy in its document layout.
    pub fn to_json_value(&self) -> Value {
        let m = &self.metadata;
        let mut meta = Map::new();
        meta.insert("version".into(), m.version.clone().into());
        meta.insert("focus".into(), m.focus.clone().into());
        meta.insert("revision_date".into(), m.revision_date.clone().into());
        meta.insert(
            "hierarchy_rules".into(),
            Value::Array(m.hierarchy_rules.iter().map(|r| r.raw_text.clone().into()).collect()),
        );
        let exclusions: Map<String, Value> =
            m.exclusion_criteria.iter().map(|(k, v)| (k.clone(), v.clone().into())).collect();
        meta.insert("exclusion_criteria".into(), Value::Object(exclusions));

        let mut cats = Map::new();
        for root in &self.roots {
            let children: Map<String, Value> =
                root.children.iter().map(|c| (c.code.to_string(), node_to_value(c))).collect();
            cats.insert(root.code.to_string(), Value::Object(children));
        }

        let mut tax = Map::new();
        tax.insert("metadata".into(), Value::Object(meta));
        tax.insert(ERROR_CATEGORIES_KEY.into(), Value::Object(cats));
        let mut doc = Map::new();
        doc.insert("taxonomy".into(), Value::Object(tax));
        Value::Object(doc)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("taxonomy values always serialize")
    }

    /// Check every structural invariant. Empty iff the taxonomy is coherent
    /// (warnings aside).
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut seen: HashMap<ErrorCode, usize> = HashMap::new();

        fn check(node: &TaxonomyNode, parent: Option<&ErrorCode>, out: &mut Vec<Diagnostic>, seen: &mut HashMap<ErrorCode, usize>) {
            let code = node.code.to_string();
            let count = seen.entry(node.code).or_insert(0);
            *count += 1;
            if *count == 2 {
                out.push(Diagnostic::error(DiagnosticKind::DuplicateCode, Some(&code), "code appears more than once"));
            }
            if let Some(parent) = parent {
                if !parent.is_parent_of(&node.code) {
                    out.push(Diagnostic::error(
                        DiagnosticKind::MisplacedCode,
                        Some(&code),
                        format!("code does not extend its parent {parent}"),
                    ));
                }
            }
            if node.name.trim().is_empty() {
                out.push(Diagnostic::error(DiagnosticKind::MissingField, Some(&code), "empty name"));
            }
            if node.description.trim().is_empty() {
                out.push(Diagnostic::error(DiagnosticKind::MissingField, Some(&code), "empty description"));
            }
            if node.code.depth() == 3 {
                if node.example.as_deref().map_or(true, |e| e.trim().is_empty()) {
                    out.push(Diagnostic::error(DiagnosticKind::MissingExample, Some(&code), "tier-3 entry has no example"));
                }
                if !node.children.is_empty() {
                    out.push(Diagnostic::error(DiagnosticKind::Tier3HasChildren, Some(&code), "tier-3 entries cannot have subcategories"));
                }
            }
            for child in &node.children {
                check(child, Some(&node.code), out, seen);
            }
        }

        for root in &self.roots {
            if root.code.depth() != 1 {
                out.push(Diagnostic::error(
                    DiagnosticKind::MisplacedCode,
                    Some(&root.code.to_string()),
                    "roots must be tier-1 codes",
                ));
            }
            check(root, None, &mut out, &mut seen);
        }

        for rule in &self.metadata.hierarchy_rules {
            match &rule.kind {
                RuleKind::CodeSupersedesCode { winner, loser } => {
                    for code in [winner, loser] {
                        if !self.contains(code) {
                            out.push(Diagnostic {
                                severity: Severity::Error,
                                kind: DiagnosticKind::DanglingRuleReference,
                                subject: Some(code.to_string()),
                                rule: Some(rule.ordinal),
                                message: format!("rule {:?} names a code missing from the taxonomy", rule.raw_text),
                            });
                        }
                    }
                }
                RuleKind::Unrecognized => out.push(Diagnostic {
                    severity: Severity::Warning,
                    kind: DiagnosticKind::UnrecognizedRule,
                    subject: None,
                    rule: Some(rule.ordinal),
                    message: format!("rule {:?} is kept but not enforced", rule.raw_text),
                }),
                _ => {}
            }
        }
        out
    }
}

/// Parse, index and validate a taxonomy document.
pub fn load_taxonomy(text: &str) -> Result<Taxonomy, TaxonomyError> {
    let tax = Taxonomy::parse_unchecked(text)?;
    if let Some(d) = tax.validate().into_iter().find(|d| d.severity == Severity::Error) {
        let subject = d.subject.clone().unwrap_or_default();
        return Err(match d.kind {
            DiagnosticKind::DuplicateCode => TaxonomyError::DuplicateCode(subject),
            DiagnosticKind::DanglingRuleReference => {
                TaxonomyError::DanglingRuleReference { ordinal: d.rule.unwrap_or(0), code: subject }
            }
            _ => TaxonomyError::Schema { path: subject, message: d.message },
        });
    }
    Ok(tax)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    DuplicateCode,
    MisplacedCode,
    MissingField,
    MissingExample,
    Tier3HasChildren,
    DanglingRuleReference,
    UnrecognizedRule,
    /// Raised by fixture integrity checks.
    Fixture,
}

impl DiagnosticKind {
    pub fn slug(self) -> &'static str {
        match self {
            DiagnosticKind::DuplicateCode => "duplicate-code",
            DiagnosticKind::MisplacedCode => "misplaced-code",
            DiagnosticKind::MissingField => "missing-field",
            DiagnosticKind::MissingExample => "missing-example",
            DiagnosticKind::Tier3HasChildren => "tier3-has-children",
            DiagnosticKind::DanglingRuleReference => "dangling-rule-reference",
            DiagnosticKind::UnrecognizedRule => "unrecognized-rule",
            DiagnosticKind::Fixture => "fixture",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub kind: DiagnosticKind,
    /// The offending code or file, when there is one.
    pub subject: Option<String>,
    pub rule: Option<u32>,
    pub message: String,
}

impl Diagnostic {
    pub fn error(kind: DiagnosticKind, subject: Option<&str>, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, kind, subject: subject.map(str::to_string), rule: None, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{level}[{}]", self.kind.slug())?;
        if let Some(rule) = self.rule {
            write!(f, " rule {rule}")?;
        }
        if let Some(subject) = &self.subject {
            write!(f, " {subject}")?;
        }
        write!(f, ": {}", self.message)
    }
}

fn schema(path: &str, message: &str) -> TaxonomyError {
    TaxonomyError::Schema { path: path.to_string(), message: message.to_string() }
}

fn object<'a>(v: &'a RawJson, path: &str) -> Result<&'a [(String, RawJson)], TaxonomyError> {
    v.as_object().ok_or_else(|| schema(path, &format!("expected an object, found {}", v.kind())))
}

fn string_field(v: &RawJson, key: &str, path: &str) -> Result<Option<String>, TaxonomyError> {
    match v.get(key) {
        None => Ok(None),
        Some(RawJson::String(s)) => Ok(Some(s.clone())),
        Some(other) => Err(schema(&format!("{path}.{key}"), &format!("expected a string, found {}", other.kind()))),
    }
}

fn parse_key(key: &str, path: &str) -> Result<ErrorCode, TaxonomyError> {
    ErrorCode::parse_any(key).map_err(|e| schema(path, &e.to_string()))
}

fn parse_metadata(meta: &RawJson) -> Result<TaxonomyMetadata, TaxonomyError> {
    let path = "taxonomy.metadata";
    object(meta, path)?;
    let mut md = TaxonomyMetadata {
        version: string_field(meta, "version", path)?.unwrap_or_default(),
        focus: string_field(meta, "focus", path)?.unwrap_or_default(),
        revision_date: string_field(meta, "revision_date", path)?.unwrap_or_default(),
        ..Default::default()
    };
    match meta.get("hierarchy_rules") {
        None => {}
        Some(RawJson::Array(items)) => {
            for (i, item) in items.iter().enumerate() {
                let RawJson::String(text) = item else {
                    return Err(schema(&format!("{path}.hierarchy_rules[{i}]"), "rules must be strings"));
                };
                md.hierarchy_rules.push(HierarchyRule::parse(text, i as u32 + 1));
            }
        }
        Some(other) => return Err(schema(&format!("{path}.hierarchy_rules"), &format!("expected an array, found {}", other.kind()))),
    }
    if let Some(ex) = meta.get("exclusion_criteria") {
        for (k, v) in object(ex, &format!("{path}.exclusion_criteria"))? {
            let RawJson::String(note) = v else {
                return Err(schema(&format!("{path}.exclusion_criteria.{k}"), "notes must be strings"));
            };
            md.exclusion_criteria.push((k.clone(), note.clone()));
        }
    }
    Ok(md)
}

fn parse_node(key: &str, v: &RawJson, path: &str, depth: usize) -> Result<TaxonomyNode, TaxonomyError> {
    let code = parse_key(key, path)?;
    object(v, path)?;
    let name = string_field(v, "name", path)?.ok_or_else(|| schema(path, "missing \"name\""))?;
    let description = string_field(v, "description", path)?.ok_or_else(|| schema(path, "missing \"description\""))?;
    let example = string_field(v, "example", path)?;
    let reconstructed = match v.get("reconstructed") {
        None => false,
        Some(RawJson::Bool(b)) => *b,
        Some(_) => return Err(schema(&format!("{path}.reconstructed"), "expected a boolean")),
    };
    let mut children = Vec::new();
    if let Some(subs) = v.get("subcategories") {
        if depth >= 3 {
            return Err(schema(path, "tier-3 entries cannot have subcategories"));
        }
        for (child_key, child) in object(subs, &format!("{path}.subcategories"))? {
            children.push(parse_node(child_key, child, &format!("{path}.{child_key}"), depth + 1)?);
        }
    }
    Ok(TaxonomyNode { code, name, description, example, reconstructed, children })
}

fn node_to_value(node: &TaxonomyNode) -> Value {
    let mut m = Map::new();
    m.insert("name".into(), node.name.clone().into());
    m.insert("description".into(), node.description.clone().into());
    if let Some(example) = &node.example {
        m.insert("example".into(), example.clone().into());
    }
    if node.reconstructed {
        m.insert("reconstructed".into(), true.into());
    }
    if node.code.depth() < 3 {
        let subs: Map<String, Value> = node.children.iter().map(|c| (c.code.to_string(), node_to_value(c))).collect();
        m.insert("subcategories".into(), Value::Object(subs));
    }
    Value::Object(m)
}
