//! Synchronous context-free grammar for generating toy pools of
//! (utterance, program) pairs.
//!
//! Rules rewrite a nonterminal into an utterance template and a program
//! template. `<NT>` refers to one expansion of `NT`, shared between both
//! sides; `<NT#2>` is a second, independent expansion. Lexicon entries are
//! terminal alternatives weighted by a Zipf law over their listed order.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dataset::{default_id, RawRecord};
use crate::error::{Error, Result};
use crate::instance::InstanceRecord;
use crate::lexer::Lexer;
use crate::rng::{stream, SeededRng};

pub const BUNDLED_GRAMMAR: &str = include_str!("../grammars/covr_toy.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSpec {
    pub lhs: String,
    #[serde(default = "one")]
    pub weight: f64,
    pub utterance: String,
    pub program: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconSpec {
    pub lhs: String,
    /// Entry `r` (0-based) gets weight `1 / (r + 1)^zipf_exponent`.
    #[serde(default)]
    pub zipf_exponent: f64,
    /// Each entry is used verbatim on both sides.
    pub entries: Vec<String>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrammarSpec {
    pub start: String,
    pub max_depth: usize,
    #[serde(default)]
    pub rules: Vec<RuleSpec>,
    #[serde(default)]
    pub lexicon: Vec<LexiconSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Ref {
    nonterminal: usize,
    tag: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Segment {
    Text(String),
    Ref(usize),
}

#[derive(Debug, Clone, PartialEq)]
struct Alternative {
    weight: f64,
    /// Distinct expansions this alternative needs; segments index into it.
    refs: Vec<usize>,
    utterance: Vec<Segment>,
    program: Vec<Segment>,
}

/// A validated grammar.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyGrammar {
    spec: GrammarSpec,
    names: Vec<String>,
    start: usize,
    alternatives: Vec<Vec<Alternative>>,
    /// Smallest derivation height of each nonterminal.
    min_height: Vec<usize>,
}

fn parse_template(
    text: &str,
    lookup: &BTreeMap<&str, usize>,
    refs: &mut Vec<Ref>,
) -> Result<Vec<Segment>> {
    let mut segments = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('<') {
        if open > 0 {
            segments.push(Segment::Text(rest[..open].to_string()));
        }
        let close = rest[open..]
            .find('>')
            .map(|c| open + c)
            .ok_or_else(|| Error::Grammar(format!("unclosed reference in {text:?}")))?;
        let inner = &rest[open + 1..close];
        let (name, tag) = match inner.split_once('#') {
            Some((n, t)) => (n, t),
            None => (inner, ""),
        };
        let nonterminal = *lookup
            .get(name)
            .ok_or_else(|| Error::Grammar(format!("undefined nonterminal <{name}> in {text:?}")))?;
        let r = Ref {
            nonterminal,
            tag: tag.to_string(),
        };
        let slot = match refs.iter().position(|x| *x == r) {
            Some(i) => i,
            None => {
                refs.push(r);
                refs.len() - 1
            }
        };
        segments.push(Segment::Ref(slot));
        rest = &rest[close + 1..];
    }
    if !rest.is_empty() {
        segments.push(Segment::Text(rest.to_string()));
    }
    Ok(segments)
}

fn slots(segments: &[Segment]) -> BTreeSet<usize> {
    segments
        .iter()
        .filter_map(|s| match s {
            Segment::Ref(i) => Some(*i),
            Segment::Text(_) => None,
        })
        .collect()
}

impl ToyGrammar {
    pub fn from_toml_str(text: &str) -> Result<ToyGrammar> {
        let spec: GrammarSpec = toml::from_str(text).map_err(|e| Error::Grammar(e.to_string()))?;
        ToyGrammar::new(spec)
    }

    pub fn bundled() -> ToyGrammar {
        ToyGrammar::from_toml_str(BUNDLED_GRAMMAR).expect("bundled grammar is valid")
    }

    pub fn new(spec: GrammarSpec) -> Result<ToyGrammar> {
        let mut names: Vec<String> = spec
            .rules
            .iter()
            .map(|r| r.lhs.clone())
            .chain(spec.lexicon.iter().map(|l| l.lhs.clone()))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        names.sort();
        let lookup: BTreeMap<&str, usize> =
            names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let start = *lookup
            .get(spec.start.as_str())
            .ok_or_else(|| Error::Grammar(format!("start symbol {:?} has no rules", spec.start)))?;

        let mut alternatives: Vec<Vec<Alternative>> = vec![Vec::new(); names.len()];
        for rule in &spec.rules {
            if !(rule.weight.is_finite() && rule.weight > 0.0) {
                return Err(Error::Grammar(format!(
                    "rule for {} has bad weight {}",
                    rule.lhs, rule.weight
                )));
            }
            let mut refs = Vec::new();
            let utterance = parse_template(&rule.utterance, &lookup, &mut refs)?;
            let program = parse_template(&rule.program, &lookup, &mut refs)?;
            if slots(&utterance) != slots(&program) {
                return Err(Error::Grammar(format!(
                    "rule for {} references different expansions on its two sides",
                    rule.lhs
                )));
            }
            let nt = lookup[rule.lhs.as_str()];
            alternatives[nt].push(Alternative {
                weight: rule.weight,
                refs: refs.iter().map(|r| r.nonterminal).collect(),
                utterance,
                program,
            });
        }
        for lex in &spec.lexicon {
            if !lex.zipf_exponent.is_finite() || lex.zipf_exponent < 0.0 {
                return Err(Error::Grammar(format!("bad zipf exponent for {}", lex.lhs)));
            }
            let nt = lookup[lex.lhs.as_str()];
            for (rank, entry) in lex.entries.iter().enumerate() {
                if entry.contains('<') || entry.trim().is_empty() {
                    return Err(Error::Grammar(format!("bad lexicon entry {entry:?}")));
                }
                alternatives[nt].push(Alternative {
                    weight: ((rank + 1) as f64).powf(-lex.zipf_exponent),
                    refs: Vec::new(),
                    utterance: vec![Segment::Text(entry.clone())],
                    program: vec![Segment::Text(entry.clone())],
                });
            }
        }

        let min_height = min_heights(&alternatives);
        let grammar = ToyGrammar {
            spec,
            names,
            start,
            alternatives,
            min_height,
        };
        grammar.check_depth()?;
        Ok(grammar)
    }

    fn check_depth(&self) -> Result<()> {
        if self.min_height[self.start] > self.spec.max_depth {
            return Err(Error::DepthExceeded(self.spec.max_depth));
        }
        Ok(())
    }

    pub fn spec(&self) -> &GrammarSpec {
        &self.spec
    }

    pub fn max_depth(&self) -> usize {
        self.spec.max_depth
    }

    pub fn nonterminals(&self) -> &[String] {
        &self.names
    }

    fn alt_height(&self, alt: &Alternative) -> usize {
        alt.refs.iter().map(|&r| self.min_height[r]).max().unwrap_or(0).saturating_add(1)
    }

    /// Expand `nt` within `budget` levels. Returns (utterance, program).
    fn expand(&self, nt: usize, budget: usize, rng: &mut SeededRng) -> (String, String) {
        let alts = &self.alternatives[nt];
        let weights: Vec<f64> = alts
            .iter()
            .map(|a| if self.alt_height(a) <= budget { a.weight } else { 0.0 })
            .collect();
        let pick = rng
            .weighted_index(&weights)
            .expect("budget admits at least the minimum-height alternative");
        let alt = &alts[pick];
        let parts: Vec<(String, String)> = alt
            .refs
            .iter()
            .map(|&r| self.expand(r, budget - 1, rng))
            .collect();
        let render = |segments: &[Segment], program_side: bool| {
            let mut out = String::new();
            for s in segments {
                match s {
                    Segment::Text(t) => out.push_str(t),
                    Segment::Ref(i) => {
                        let (u, p) = &parts[*i];
                        out.push_str(if program_side { p } else { u });
                    }
                }
                out.push(' ');
            }
            out.split_whitespace().collect::<Vec<_>>().join(" ")
        };
        (render(&alt.utterance, false), render(&alt.program, true))
    }

    /// `n` top-down derivations. Ids are 1-based, zero-padded.
    pub fn generate(&self, n: usize, seed: u64) -> Result<Vec<RawRecord>> {
        self.check_depth()?;
        let mut rng = SeededRng::new(seed, stream::GEN_POOL);
        Ok((0..n)
            .map(|i| {
                let (utterance, program) = self.expand(self.start, self.spec.max_depth, &mut rng);
                RawRecord {
                    id: Some(default_id(i + 1)),
                    utterance,
                    program,
                }
            })
            .collect())
    }
}

/// Least fixpoint of h(A) = min over alternatives of 1 + max h(child).
fn min_heights(alternatives: &[Vec<Alternative>]) -> Vec<usize> {
    let mut height = vec![usize::MAX; alternatives.len()];
    loop {
        let mut changed = false;
        for (nt, alts) in alternatives.iter().enumerate() {
            for alt in alts {
                let child = alt.refs.iter().map(|&r| height[r]).max().unwrap_or(0);
                if child != usize::MAX && child + 1 < height[nt] {
                    height[nt] = child + 1;
                    changed = true;
                }
            }
        }
        if !changed {
            return height;
        }
    }
}

pub fn gen_pool(grammar: &ToyGrammar, n: usize, seed: u64) -> Result<Vec<RawRecord>> {
    grammar.generate(n, seed)
}

/// Generate and parse in one step.
pub fn gen_instances(
    grammar: &ToyGrammar,
    n: usize,
    seed: u64,
    lexer: &Lexer,
) -> Result<Vec<InstanceRecord>> {
    grammar
        .generate(n, seed)?
        .into_iter()
        .map(|r| {
            let id = r.id.expect("generated records carry ids");
            InstanceRecord::parse(&id, &r.utterance, &r.program, lexer)
        })
        .collect()
}
