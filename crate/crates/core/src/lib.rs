//! Structurally diverse subsampling of semantic-parsing datasets.
//!
//! Programs are tokenized and parsed into trees ([`lexer`], [`ast`]), broken
//! into substructures ([`substructure`]), indexed ([`index`]) and sampled
//! greedily so that rare structures are covered early ([`sampler`]). The
//! same machinery drives compositional train/test splits ([`splits`]) and
//! diversity measurements ([`analysis`]).

pub mod analysis;
pub mod ast;
pub mod config;
pub mod dataset;
pub mod error;
pub mod grammar;
pub mod index;
pub mod instance;
pub mod lexer;
pub mod rng;
pub mod sampler;
pub mod splits;
pub mod substructure;

pub use ast::{build_ast, Ast, AstNode, NodeClass};
pub use config::Config;
pub use error::{Error, Result};
pub use grammar::ToyGrammar;
pub use index::{build_index, PoolIndex};
pub use instance::InstanceRecord;
pub use lexer::{anonymize, tokenize, Lexer, LexerConfig, TemplateKey, Token, TokenClass};
pub use sampler::{sample_diverse, sample_random, Preset, SampleResult, SamplerConfig};
pub use splits::{check_solvable, split, Split, SplitKind, SplitSpec, TestSize};
pub use substructure::{
    enumerate_subtrees, SubstructureConfig, SubstructureKey, SubstructureKind,
};
