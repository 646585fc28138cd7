use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ast::{build_ast, Ast};
use crate::error::Result;
use crate::lexer::{Lexer, TemplateKey};

/// One (utterance, program) pair together with its anonymized AST and
/// template. Substructure bags are derived from these on demand.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: String,
    pub utterance: String,
    pub program: String,
    pub template: TemplateKey,
    pub ast: Ast,
}

impl InstanceRecord {
    /// Tokenize, anonymize, then build the AST. Errors carry the id.
    pub fn parse(id: &str, utterance: &str, program: &str, lexer: &Lexer) -> Result<Self> {
        let inner = || -> Result<(TemplateKey, Ast)> {
            let mut tokens = lexer.tokenize(program)?;
            lexer.anonymize_tokens(&mut tokens);
            let template = TemplateKey::from_tokens(&tokens);
            let ast = build_ast(&tokens, lexer)?;
            Ok((template, ast))
        };
        let (template, ast) = inner().map_err(|e| e.for_instance(id))?;
        Ok(InstanceRecord {
            id: id.to_string(),
            utterance: utterance.to_string(),
            program: program.to_string(),
            template,
            ast,
        })
    }

    /// Non-structural tokens of the anonymized program, which are exactly the
    /// labels of the AST's non-synthetic nodes.
    pub fn program_vocabulary(&self) -> BTreeSet<&str> {
        let synthetic = if self.ast.has_synthetic_root() {
            self.ast.root()
        } else {
            None
        };
        self.ast
            .nodes()
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != synthetic)
            .map(|(_, n)| n.label.as_str())
            .collect()
    }
}
