//! Substructure extraction: bounded-size subtrees, AST bigrams, templates and
//! utterance n-grams, each canonicalized into a [`SubstructureKey`].

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ast::Ast;
use crate::error::{Error, Result};
use crate::instance::InstanceRecord;
use crate::lexer::{Lexer, TemplateKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubstructureKind {
    Subtree,
    Bigram,
    Template,
    Ngram,
}

impl SubstructureKind {
    pub fn name(self) -> &'static str {
        match self {
            SubstructureKind::Subtree => "subtree",
            SubstructureKind::Bigram => "bigram",
            SubstructureKind::Template => "template",
            SubstructureKind::Ngram => "ngram",
        }
    }
}

impl fmt::Display for SubstructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SubstructureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subtree" => Ok(SubstructureKind::Subtree),
            "bigram" => Ok(SubstructureKind::Bigram),
            "template" => Ok(SubstructureKind::Template),
            "ngram" => Ok(SubstructureKind::Ngram),
            other => Err(Error::Config(format!("unknown substructure kind {other:?}"))),
        }
    }
}

/// A canonical substructure. Keys of different kinds never compare equal,
/// and the rendered form is prefixed with the kind name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubstructureKey {
    pub kind: SubstructureKind,
    pub key: String,
}

impl SubstructureKey {
    pub fn new(kind: SubstructureKind, key: impl Into<String>) -> Self {
        SubstructureKey {
            kind,
            key: key.into(),
        }
    }

    pub fn subtree(key: impl Into<String>) -> Self {
        Self::new(SubstructureKind::Subtree, key)
    }
}

impl fmt::Display for SubstructureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind, self.key)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubstructureConfig {
    pub kind: SubstructureKind,
    /// Maximum subtree size in nodes.
    pub d: usize,
    /// Maximum utterance n-gram length.
    pub n_max: usize,
}

impl Default for SubstructureConfig {
    fn default() -> Self {
        SubstructureConfig {
            kind: SubstructureKind::Subtree,
            d: 4,
            n_max: 3,
        }
    }
}

impl SubstructureConfig {
    pub fn of_kind(kind: SubstructureKind) -> Self {
        SubstructureConfig {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Config("subtree size d must be at least 1".into()));
        }
        if self.n_max == 0 {
            return Err(Error::Config("n_max must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstructureBag {
    pub instance_id: String,
    pub keys: BTreeSet<SubstructureKey>,
}

impl SubstructureBag {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// Escape the characters that carry meaning in serialized subtrees.
pub fn escape_label(label: &str, out: &mut String) {
    for ch in label.chars() {
        if matches!(ch, '\\' | '(' | ')' | ',') {
            out.push('\\');
        }
        out.push(ch);
    }
}

fn escaped(label: &str) -> String {
    let mut s = String::with_capacity(label.len());
    escape_label(label, &mut s);
    s
}

/// All connected rooted subtrees with at most `d` nodes, serialized as
/// `label(child,child,...)` with child order preserved. Pruned children leave
/// no marker.
pub fn enumerate_subtrees(ast: &Ast, d: usize) -> BTreeSet<SubstructureKey> {
    let mut out = BTreeSet::new();
    if d == 0 {
        return out;
    }
    let labels: Vec<String> = ast.nodes().iter().map(|n| escaped(&n.label)).collect();
    for v in 0..ast.len() {
        for (_, shape) in rooted_shapes(ast, &labels, v, d) {
            out.insert(SubstructureKey::subtree(shape));
        }
    }
    out
}

/// (size, serialization) of every subtree rooted at `v` with at most
/// `budget` nodes.
fn rooted_shapes(ast: &Ast, labels: &[String], v: usize, budget: usize) -> Vec<(usize, String)> {
    let label = &labels[v];
    let children = &ast.node(v).children;
    if budget == 1 || children.is_empty() {
        return vec![(1, label.clone())];
    }
    // partial selections over the children seen so far
    let mut partials: Vec<(usize, Vec<&str>)> = vec![(1, Vec::new())];
    let mut child_shapes: Vec<Vec<(usize, String)>> = Vec::with_capacity(children.len());
    for &c in children {
        child_shapes.push(rooted_shapes(ast, labels, c, budget - 1));
    }
    for shapes in &child_shapes {
        let mut next = partials.clone();
        for (size, parts) in &partials {
            for (child_size, child) in shapes {
                if size + child_size <= budget {
                    let mut parts = parts.clone();
                    parts.push(child.as_str());
                    next.push((size + child_size, parts));
                }
            }
        }
        partials = next;
    }
    partials
        .into_iter()
        .map(|(size, parts)| {
            if parts.is_empty() {
                (size, label.clone())
            } else {
                (size, format!("{}({})", label, parts.join(",")))
            }
        })
        .collect()
}

/// Parent-child pairs (`PC(p,c)`) and adjacent-sibling pairs (`SIB(a,b)`).
pub fn enumerate_bigrams(ast: &Ast) -> BTreeSet<SubstructureKey> {
    let mut out = BTreeSet::new();
    for node in ast.nodes() {
        let parent = escaped(&node.label);
        for &c in &node.children {
            let child = escaped(&ast.node(c).label);
            out.insert(SubstructureKey::new(
                SubstructureKind::Bigram,
                format!("PC({parent},{child})"),
            ));
        }
        for pair in node.children.windows(2) {
            let a = escaped(&ast.node(pair[0]).label);
            let b = escaped(&ast.node(pair[1]).label);
            out.insert(SubstructureKey::new(
                SubstructureKind::Bigram,
                format!("SIB({a},{b})"),
            ));
        }
    }
    out
}

/// Contiguous word n-grams of length 1..=n_max.
pub fn extract_ngrams(utterance: &str, n_max: usize) -> BTreeSet<SubstructureKey> {
    let words: Vec<&str> = utterance.split_whitespace().collect();
    let mut out = BTreeSet::new();
    for n in 1..=n_max.min(words.len()) {
        for window in words.windows(n) {
            out.insert(SubstructureKey::new(SubstructureKind::Ngram, window.join(" ")));
        }
    }
    out
}

pub fn template_key(template: &TemplateKey) -> SubstructureKey {
    SubstructureKey::new(SubstructureKind::Template, template.as_str())
}

/// Keys of one instance under `cfg`, computed from its stored AST, template
/// and utterance.
pub fn bag_keys(record: &InstanceRecord, cfg: &SubstructureConfig) -> BTreeSet<SubstructureKey> {
    match cfg.kind {
        SubstructureKind::Subtree => enumerate_subtrees(&record.ast, cfg.d),
        SubstructureKind::Bigram => enumerate_bigrams(&record.ast),
        SubstructureKind::Template => BTreeSet::from([template_key(&record.template)]),
        SubstructureKind::Ngram => extract_ngrams(&record.utterance, cfg.n_max),
    }
}

pub fn substructure_map(record: &InstanceRecord, cfg: &SubstructureConfig) -> SubstructureBag {
    SubstructureBag {
        instance_id: record.id.clone(),
        keys: bag_keys(record, cfg),
    }
}

/// Parse a raw instance and extract its bag in one step.
pub fn substructure_map_raw(
    id: &str,
    utterance: &str,
    program: &str,
    cfg: &SubstructureConfig,
    lexer: &Lexer,
) -> Result<SubstructureBag> {
    let record = InstanceRecord::parse(id, utterance, program, lexer)?;
    Ok(substructure_map(&record, cfg))
}
