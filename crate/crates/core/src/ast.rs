//! Ordered labeled trees built from classified program tokens.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexer::{FunctionRule, Lexer, Token, TokenClass};

/// Label of the node that joins several top-level nodes into one tree.
pub const SYNTHETIC_ROOT: &str = "@ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeClass {
    Function,
    Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstNode {
    pub label: String,
    pub class: NodeClass,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ast {
    nodes: Vec<AstNode>,
    root: Option<usize>,
}

impl Ast {
    pub fn from_parts(nodes: Vec<AstNode>, root: Option<usize>) -> Ast {
        Ast { nodes, root }
    }

    pub fn nodes(&self) -> &[AstNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &AstNode {
        &self.nodes[id]
    }

    pub fn root(&self) -> Option<usize> {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn has_synthetic_root(&self) -> bool {
        self.root
            .is_some_and(|r| self.nodes[r].label == SYNTHETIC_ROOT && self.nodes[r].class == NodeClass::Function)
    }

    /// Parent of every node; `None` for the root.
    pub fn parents(&self) -> Vec<Option<usize>> {
        let mut parents = vec![None; self.nodes.len()];
        for (id, node) in self.nodes.iter().enumerate() {
            for &c in &node.children {
                parents[c] = Some(id);
            }
        }
        parents
    }

    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let Some(root) = self.root else { return out };
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[id].children.iter().rev());
        }
        out
    }

    /// Number of nodes on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        let Some(root) = self.root else { return 0 };
        let mut best = 0;
        let mut stack = vec![(root, 1)];
        while let Some((id, d)) = stack.pop() {
            best = best.max(d);
            stack.extend(self.nodes[id].children.iter().map(|&c| (c, d + 1)));
        }
        best
    }

    /// Render the tree back into program text using the lexer's bracket
    /// conventions. A synthetic root is rendered as its children in sequence.
    pub fn to_program(&self, lexer: &Lexer) -> String {
        let mut out: Vec<&str> = Vec::new();
        if let Some(root) = self.root {
            if self.has_synthetic_root() {
                for &c in &self.nodes[root].children {
                    self.render(c, lexer, &mut out);
                }
            } else {
                self.render(root, lexer, &mut out);
            }
        }
        out.join(" ")
    }

    fn render<'a>(&'a self, id: usize, lexer: &'a Lexer, out: &mut Vec<&'a str>) {
        let cfg = lexer.config();
        let node = &self.nodes[id];
        match (node.class, lexer.function_rule()) {
            (NodeClass::Value, _) => out.push(&node.label),
            (NodeClass::Function, FunctionRule::NextTokenIsOpenParen) => {
                out.push(&node.label);
                out.push(&cfg.open);
                for (i, &c) in node.children.iter().enumerate() {
                    if i > 0 {
                        out.push(&cfg.separator);
                    }
                    self.render(c, lexer, out);
                }
                out.push(&cfg.close);
            }
            (NodeClass::Function, _) => {
                out.push(&cfg.open);
                out.push(&node.label);
                for &c in &node.children {
                    self.render(c, lexer, out);
                }
                out.push(&cfg.close);
            }
        }
    }
}

enum FrameKind {
    Top,
    Group,
    Args(usize),
}

struct Frame {
    kind: FrameKind,
    items: Vec<usize>,
    opened_at: usize,
}

/// Build the AST for a classified token stream.
///
/// A function token followed by the open token takes the bracket group as its
/// argument list (`f ( a , b )`). Under the group-head and explicit-list rules
/// a function token that starts a bracket group takes the rest of the group
/// (`( f a b )`). Other brackets only group; their contents are spliced into
/// the enclosing list. Several top-level nodes hang under [`SYNTHETIC_ROOT`].
pub fn build_ast(tokens: &[Token], lexer: &Lexer) -> Result<Ast> {
    if tokens.is_empty() {
        return Err(Error::EmptyProgram);
    }
    let head_form = !matches!(lexer.function_rule(), FunctionRule::NextTokenIsOpenParen);
    let call_form = !matches!(lexer.function_rule(), FunctionRule::GroupHead);
    let is_open = |i: usize| {
        tokens
            .get(i)
            .is_some_and(|t| t.class == TokenClass::Structural && lexer.is_open(&t.text))
    };

    let mut nodes: Vec<AstNode> = Vec::new();
    let mut stack = vec![Frame {
        kind: FrameKind::Top,
        items: Vec::new(),
        opened_at: 0,
    }];
    let new_node = |tok: &Token, nodes: &mut Vec<AstNode>| {
        nodes.push(AstNode {
            label: tok.text.clone(),
            class: match tok.class {
                TokenClass::Function => NodeClass::Function,
                _ => NodeClass::Value,
            },
            children: Vec::new(),
        });
        nodes.len() - 1
    };

    let mut i = 0;
    while i < tokens.len() {
        let tok = &tokens[i];
        match tok.class {
            TokenClass::Structural if lexer.is_open(&tok.text) => {
                let head = tokens
                    .get(i + 1)
                    .filter(|t| head_form && t.class == TokenClass::Function);
                if let Some(head) = head {
                    let id = new_node(head, &mut nodes);
                    stack.last_mut().unwrap().items.push(id);
                    stack.push(Frame {
                        kind: FrameKind::Args(id),
                        items: Vec::new(),
                        opened_at: i,
                    });
                    i += 2;
                } else {
                    stack.push(Frame {
                        kind: FrameKind::Group,
                        items: Vec::new(),
                        opened_at: i,
                    });
                    i += 1;
                }
            }
            TokenClass::Structural if lexer.is_close(&tok.text) => {
                if stack.len() == 1 {
                    return Err(Error::UnbalancedParens(i));
                }
                let frame = stack.pop().unwrap();
                match frame.kind {
                    FrameKind::Args(id) => nodes[id].children = frame.items,
                    FrameKind::Group => stack.last_mut().unwrap().items.extend(frame.items),
                    FrameKind::Top => unreachable!(),
                }
                i += 1;
            }
            TokenClass::Structural => i += 1,
            TokenClass::Function if call_form && is_open(i + 1) => {
                let id = new_node(tok, &mut nodes);
                stack.last_mut().unwrap().items.push(id);
                stack.push(Frame {
                    kind: FrameKind::Args(id),
                    items: Vec::new(),
                    opened_at: i + 1,
                });
                i += 2;
            }
            TokenClass::Function | TokenClass::Value => {
                let id = new_node(tok, &mut nodes);
                stack.last_mut().unwrap().items.push(id);
                i += 1;
            }
        }
    }
    if stack.len() > 1 {
        return Err(Error::UnbalancedParens(stack.last().unwrap().opened_at));
    }
    let top = stack.pop().unwrap().items;
    let root = match top.len() {
        0 => None,
        1 => Some(top[0]),
        _ => {
            nodes.push(AstNode {
                label: SYNTHETIC_ROOT.to_string(),
                class: NodeClass::Function,
                children: top,
            });
            Some(nodes.len() - 1)
        }
    };
    Ok(Ast { nodes, root })
}
