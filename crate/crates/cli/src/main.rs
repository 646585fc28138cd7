use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod manifest;

/// Structurally diverse sampling, splitting and analysis of
/// (utterance, program) pools.
#[derive(Debug, Parser)]
#[command(name = "structdiv", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Bundled lexer/substructure profile (covr, schema2qa, overnight, atis, smcalflow).
    #[arg(long)]
    pub profile: Option<String>,
    /// TOML config file; overrides --profile and $STRUCTDIV_CONFIG_DIR.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "structdiv-out")]
    pub out: PathBuf,
    /// Skip malformed lines instead of aborting.
    #[arg(long)]
    pub lenient: bool,
    /// Drop programs that make up more than this fraction of the pool.
    #[arg(long)]
    pub frequency_cap: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Subtree,
    Bigram,
    Template,
    Ngram,
}

impl From<KindArg> for structdiv::SubstructureKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Subtree => structdiv::SubstructureKind::Subtree,
            KindArg::Bigram => structdiv::SubstructureKind::Bigram,
            KindArg::Template => structdiv::SubstructureKind::Template,
            KindArg::Ngram => structdiv::SubstructureKind::Ngram,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ArgmaxArg {
    LazyHeap,
    LinearScan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitKindArg {
    Iid,
    Template,
    Subtree,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a pool file and report malformed lines.
    IngestCheck {
        pool: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Count instances and unique bigrams, subtrees and templates.
    Stats {
        pool: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Maximum subtree size; defaults to the config value.
        #[arg(long)]
        d: Option<usize>,
    },
    /// Draw a diverse (or random) sample.
    Sample {
        pool: PathBuf,
        #[command(flatten)]
        common: Common,
        /// subtree-randex, subtree-randnewt, subtree-freqnewt, template,
        /// template-freq, bigram, bigram-freq or random.
        #[arg(long)]
        preset: structdiv::Preset,
        #[arg(long)]
        budget: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, value_enum, default_value = "lazy-heap")]
        argmax: ArgmaxArg,
    },
    /// Split a pool into pool and test id lists.
    Split {
        pool: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        kind: SplitKindArg,
        #[arg(long, conflicts_with = "test_size", required_unless_present = "test_size")]
        test_fraction: Option<f64>,
        #[arg(long)]
        test_size: Option<usize>,
        #[arg(long)]
        seed: u64,
    },
    /// Check that every program token of the test side occurs in the pool side.
    CheckSolvable {
        pool: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Directory holding pool.ids and test.ids.
        #[arg(long)]
        split: PathBuf,
    },
    /// Substructure coverage of samples, bucketed by pool frequency rank.
    AnalyzeCoverage {
        pool: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Id list, optionally as NAME=PATH; repeatable.
        #[arg(long = "sample", required = true)]
        samples: Vec<String>,
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[arg(long)]
        d: Option<usize>,
        /// Geometric bucket base.
        #[arg(long, default_value_t = 2.0)]
        bucket_base: f64,
    },
    /// Average pairwise mutual information of sample substructures.
    AnalyzeAmi {
        pool: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long = "sample", required = true)]
        samples: Vec<String>,
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[arg(long)]
        d: Option<usize>,
        /// Average over off-diagonal pairs only.
        #[arg(long)]
        exclude_diagonal: bool,
        /// Also write the K highest-MI pairs per sample.
        #[arg(long, default_value_t = 0)]
        top_k: usize,
    },
    /// Generate a pool from the bundled (or a given) synchronous grammar.
    GenPool {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Grammar TOML; defaults to the bundled toy grammar.
        #[arg(long)]
        grammar: Option<PathBuf>,
        #[arg(long, default_value = "structdiv-out")]
        out: PathBuf,
    },
    /// Re-run the command recorded in a manifest and compare output digests.
    Replay {
        manifest: PathBuf,
        /// Where to write the re-run outputs.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    match commands::run(cli.command, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
