//! Program tokenization, token classification and template anonymization.
//!
//! Programs are whitespace-delimited. A double-quoted string is a single
//! token even when it contains whitespace; backslash escapes the next
//! character inside a string. Every token is classified as a function, a
//! value or a structural token. Structural tokens (parentheses and commas
//! by default) only shape the tree and never become AST nodes.

use std::collections::BTreeSet;
use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TokenClass {
    Function,
    Value,
    Structural,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub class: TokenClass,
    pub position: usize,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.class {
            TokenClass::Function => "Fn",
            TokenClass::Value => "Val",
            TokenClass::Structural => "St",
        };
        write!(f, "{}:{}", self.text, tag)
    }
}

/// How function tokens are recognised.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FunctionRule {
    /// `f ( a , b )`: a token immediately followed by the open token.
    NextTokenIsOpenParen,
    /// Only the listed tokens are functions. A listed token that opens a
    /// bracket group takes the rest of the group as arguments; elsewhere it
    /// takes a following bracket group, if any.
    ExplicitList { functions: BTreeSet<String> },
    /// S-expressions, `( f a b )`: the first token of every bracket group.
    GroupHead,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnonymizationRule {
    pub pattern: String,
    pub placeholder: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LexerConfig {
    pub structural_tokens: BTreeSet<String>,
    pub open: String,
    pub close: String,
    pub separator: String,
    /// Applied in order; the first matching rule wins.
    pub anonymization_rules: Vec<AnonymizationRule>,
    pub function_rule: FunctionRule,
}

impl Default for LexerConfig {
    fn default() -> Self {
        LexerConfig {
            structural_tokens: ["(", ")", ","].iter().map(|s| s.to_string()).collect(),
            open: "(".into(),
            close: ")".into(),
            separator: ",".into(),
            anonymization_rules: vec![
                AnonymizationRule {
                    pattern: r#"^".*"$"#.into(),
                    placeholder: "@STR".into(),
                },
                AnonymizationRule {
                    pattern: r"^[-+]?[0-9]+(\.[0-9]+)?$".into(),
                    placeholder: "@NUM".into(),
                },
            ],
            function_rule: FunctionRule::NextTokenIsOpenParen,
        }
    }
}

impl LexerConfig {
    pub fn compile(&self) -> Result<Lexer> {
        Lexer::new(self.clone())
    }
}

/// A validated [`LexerConfig`] with compiled anonymization patterns.
#[derive(Debug, Clone)]
pub struct Lexer {
    config: LexerConfig,
    rules: Vec<(Regex, String)>,
}

impl Default for Lexer {
    fn default() -> Self {
        Lexer::new(LexerConfig::default()).expect("default lexer config is valid")
    }
}

impl Lexer {
    pub fn new(config: LexerConfig) -> Result<Lexer> {
        for (name, tok) in [
            ("open", &config.open),
            ("close", &config.close),
            ("separator", &config.separator),
        ] {
            if !config.structural_tokens.contains(tok) {
                return Err(Error::Config(format!(
                    "{name} token {tok:?} is not a structural token"
                )));
            }
        }
        if config.open == config.close {
            return Err(Error::Config("open and close tokens must differ".into()));
        }
        for tok in &config.structural_tokens {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(Error::Config(format!("bad structural token {tok:?}")));
            }
        }
        let mut rules = Vec::with_capacity(config.anonymization_rules.len());
        for rule in &config.anonymization_rules {
            let re = Regex::new(&rule.pattern).map_err(|e| {
                Error::Config(format!("anonymization pattern {:?}: {e}", rule.pattern))
            })?;
            if config.structural_tokens.contains(&rule.placeholder) {
                return Err(Error::Config(format!(
                    "placeholder {:?} collides with a structural token",
                    rule.placeholder
                )));
            }
            if rule.placeholder.is_empty() || rule.placeholder.chars().any(char::is_whitespace) {
                return Err(Error::Config(format!("bad placeholder {:?}", rule.placeholder)));
            }
            rules.push((re, rule.placeholder.clone()));
        }
        let lexer = Lexer { config, rules };
        // placeholders must be fixed points or anonymization is not idempotent
        for (_, placeholder) in &lexer.rules {
            let again = lexer.anonymize_text(placeholder);
            if again != placeholder.as_str() {
                return Err(Error::Config(format!(
                    "placeholder {placeholder:?} is rewritten to {again:?}"
                )));
            }
        }
        Ok(lexer)
    }

    pub fn config(&self) -> &LexerConfig {
        &self.config
    }

    pub fn is_open(&self, text: &str) -> bool {
        text == self.config.open
    }

    pub fn is_close(&self, text: &str) -> bool {
        text == self.config.close
    }

    pub fn is_separator(&self, text: &str) -> bool {
        text == self.config.separator
    }

    pub fn function_rule(&self) -> &FunctionRule {
        &self.config.function_rule
    }

    /// Split `program` into tokens and classify them.
    pub fn tokenize(&self, program: &str) -> Result<Vec<Token>> {
        let texts = split_words(program)?;
        let structural: Vec<bool> = texts
            .iter()
            .map(|t| self.config.structural_tokens.contains(t))
            .collect();
        let tokens = texts
            .iter()
            .enumerate()
            .map(|(i, text)| {
                let class = if structural[i] {
                    TokenClass::Structural
                } else if self.classifies_as_function(&texts, i) {
                    TokenClass::Function
                } else {
                    TokenClass::Value
                };
                Token {
                    text: text.clone(),
                    class,
                    position: i,
                }
            })
            .collect();
        Ok(tokens)
    }

    fn classifies_as_function(&self, texts: &[String], i: usize) -> bool {
        match &self.config.function_rule {
            FunctionRule::NextTokenIsOpenParen => {
                texts.get(i + 1).is_some_and(|next| self.is_open(next))
            }
            FunctionRule::ExplicitList { functions } => functions.contains(&texts[i]),
            FunctionRule::GroupHead => i > 0 && self.is_open(&texts[i - 1]),
        }
    }

    /// Replace the text of every non-structural token matching a rule with
    /// that rule's placeholder. Classes are left untouched.
    pub fn anonymize_tokens(&self, tokens: &mut [Token]) {
        for tok in tokens.iter_mut() {
            if tok.class == TokenClass::Structural {
                continue;
            }
            if let Some(placeholder) = self.placeholder_for(&tok.text) {
                tok.text = placeholder.to_string();
            }
        }
    }

    fn placeholder_for(&self, text: &str) -> Option<&str> {
        self.rules
            .iter()
            .find(|(re, _)| re.is_match(text))
            .map(|(_, p)| p.as_str())
    }

    fn anonymize_text<'a>(&'a self, text: &'a str) -> &'a str {
        self.placeholder_for(text).unwrap_or(text)
    }

    /// The program's template: anonymized tokens joined by single spaces.
    pub fn anonymize(&self, program: &str) -> Result<TemplateKey> {
        let mut tokens = self.tokenize(program)?;
        self.anonymize_tokens(&mut tokens);
        Ok(TemplateKey::from_tokens(&tokens))
    }
}

/// Canonical anonymized program text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TemplateKey(pub String);

impl TemplateKey {
    pub fn from_tokens(tokens: &[Token]) -> TemplateKey {
        TemplateKey(join_tokens(tokens))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TemplateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn join_tokens(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, tok) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&tok.text);
    }
    out
}

pub fn tokenize(program: &str, lexer: &Lexer) -> Result<Vec<Token>> {
    lexer.tokenize(program)
}

pub fn anonymize(program: &str, lexer: &Lexer) -> Result<TemplateKey> {
    lexer.anonymize(program)
}

fn split_words(program: &str) -> Result<Vec<String>> {
    let mut words = Vec::new();
    let mut current = String::new();
    let mut chars = program.char_indices();
    while let Some((at, ch)) = chars.next() {
        if ch == '"' {
            current.push(ch);
            let mut closed = false;
            while let Some((_, c)) = chars.next() {
                current.push(c);
                match c {
                    '\\' => {
                        if let Some((_, escaped)) = chars.next() {
                            current.push(escaped);
                        }
                    }
                    '"' => {
                        closed = true;
                        break;
                    }
                    _ => {}
                }
            }
            if !closed {
                return Err(Error::UnbalancedQuote(at));
            }
        } else if ch.is_whitespace() {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
        } else {
            current.push(ch);
        }
    }
    if !current.is_empty() {
        words.push(current);
    }
    Ok(words)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes(program: &str, lexer: &Lexer) -> Vec<String> {
        lexer
            .tokenize(program)
            .unwrap()
            .iter()
            .map(|t| t.to_string())
            .collect()
    }

    #[test]
    fn default_rule_marks_calls() {
        let lexer = Lexer::default();
        assert_eq!(
            classes("count ( find ( dog ) )", &lexer),
            ["count:Fn", "(:St", "find:Fn", "(:St", "dog:Val", "):St", "):St"]
        );
        assert_eq!(classes("dog", &lexer), ["dog:Val"]);
    }

    #[test]
    fn quoted_string_is_one_token() {
        let lexer = Lexer::default();
        assert_eq!(
            classes("filter id =~ \"aideliz li\"", &lexer),
            ["filter:Val", "id:Val", "=~:Val", "\"aideliz li\":Val"]
        );
        let toks = lexer.tokenize(r#"say "a \" b""#).unwrap();
        assert_eq!(toks[1].text, r#""a \" b""#);
    }

    #[test]
    fn unterminated_quote() {
        let lexer = Lexer::default();
        assert_eq!(
            lexer.tokenize("f ( \"abc )"),
            Err(Error::UnbalancedQuote(4))
        );
    }

    #[test]
    fn anonymize_examples() {
        let lexer = Lexer::default();
        assert_eq!(
            lexer.anonymize("( Person ) filter id =~ \"aideliz li\"").unwrap().0,
            "( Person ) filter id =~ @STR"
        );
        assert_eq!(
            lexer.anonymize("( number 180 en.cm )").unwrap().0,
            "( number @NUM en.cm )"
        );
        assert_eq!(
            lexer.anonymize("count ( find ( dog ) )").unwrap().0,
            "count ( find ( dog ) )"
        );
    }

    #[test]
    fn whitespace_is_normalized() {
        let lexer = Lexer::default();
        assert_eq!(
            lexer.anonymize("  f (\ta ,  b )\n").unwrap().0,
            "f ( a , b )"
        );
    }

    #[test]
    fn group_head_and_explicit_rules() {
        let cfg = LexerConfig {
            function_rule: FunctionRule::GroupHead,
            ..LexerConfig::default()
        };
        let lexer = cfg.compile().unwrap();
        assert_eq!(
            classes("( string height )", &lexer),
            ["(:St", "string:Fn", "height:Val", "):St"]
        );
        let cfg = LexerConfig {
            function_rule: FunctionRule::ExplicitList {
                functions: ["and".to_string()].into_iter().collect(),
            },
            ..LexerConfig::default()
        };
        let lexer = cfg.compile().unwrap();
        assert_eq!(
            classes("( and a b ) c (", &lexer),
            ["(:St", "and:Fn", "a:Val", "b:Val", "):St", "c:Val", "(:St"]
        );
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = LexerConfig::default();
        cfg.anonymization_rules.push(AnonymizationRule {
            pattern: "^x$".into(),
            placeholder: ",".into(),
        });
        assert!(matches!(cfg.compile(), Err(Error::Config(_))));

        let cfg = LexerConfig {
            anonymization_rules: vec![
                AnonymizationRule {
                    pattern: "^[a-z]+$".into(),
                    placeholder: "@W".into(),
                },
                AnonymizationRule {
                    pattern: "^@W$".into(),
                    placeholder: "@X".into(),
                },
            ],
            ..LexerConfig::default()
        };
        assert!(matches!(cfg.compile(), Err(Error::Config(_))));

        let cfg = LexerConfig {
            open: "[".into(),
            ..LexerConfig::default()
        };
        assert!(cfg.compile().is_err());
    }
}
