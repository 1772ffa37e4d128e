//! `expdec`: generate regular graphs, measure them, decompose them into
//! expanders and lift them to cyclic covers.
//!
//! Exit status is 0 on success, 1 when a verification fails and 2 on any
//! input or computation error.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("verification failed: {0}")]
    Failed(String),
    #[error(transparent)]
    Graph(#[from] expdec::GraphError),
    #[error(transparent)]
    Markov(#[from] expdec::markov::MarkovError),
    #[error(transparent)]
    Local(#[from] expdec::localstats::LocalStatsError),
    #[error(transparent)]
    Decompose(#[from] expdec::decompose::DecomposeError),
    #[error(transparent)]
    Cover(#[from] expdec::covers::CoverError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "expdec", version, about = "Expander decomposition toolkit for regular multigraphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated graph as an edge list.
    Gen(GenArgs),
    /// Rooted-ball statistics, optionally against a Cayley graph.
    Stats(StatsArgs),
    /// Contraction defects over the standard test-function family.
    MarkovTest(MarkovArgs),
    /// Split a regular graph into expanders with few edge edits.
    Decompose(DecomposeArgs),
    /// Check that a graph is a disjoint union of expanders.
    Verify(VerifyArgs),
    /// Build the cyclic cover defined by an edge weighting.
    Cover(CoverArgs),
    /// Cycle sums, walk sums and the fiber-cut bound of a weighting.
    CoverStats(CoverStatsArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Root seed for every random choice.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON report path; printed to stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Record wall-clock timings (makes reports run-dependent).
    #[arg(long)]
    pub timings: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindArg {
    Cycle,
    Complete,
    Circulant,
    RandomRegular,
    Petersen,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: Option<usize>,
    /// Comma-separated circulant offsets.
    #[arg(long, value_delimiter = ',')]
    pub offsets: Vec<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct StatsArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub radius: usize,
    /// Reference Cayley graph: `grid:<dim>`, `free:<rank>` or `sl3z`.
    #[arg(long)]
    pub cayley: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct MarkovArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 64)]
    pub random_functions: usize,
    #[arg(long, default_value_t = 64)]
    pub random_indicators: usize,
    #[arg(long, default_value_t = 8)]
    pub ball_roots: usize,
    #[arg(long, default_value_t = 9)]
    pub quantiles: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CutModeArg {
    Auto,
    Exact,
    Spectral,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub c_prime: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub exact_cut_limit: Option<usize>,
    #[arg(long, value_enum, default_value_t = CutModeArg::Auto)]
    pub cut_mode: CutModeArg,
    /// Output edge list of the decomposed graph.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    pub before: PathBuf,
    #[arg(long)]
    pub after: PathBuf,
    #[arg(long, conflicts_with = "gamma_from_report", required_unless_present = "gamma_from_report")]
    pub gamma: Option<f64>,
    /// Take `gamma_required` from a decompose report.
    #[arg(long)]
    pub gamma_from_report: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomWeights {
    Uniform,
    Signs,
    Coboundary,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct WeightSource {
    #[arg(long)]
    pub graph: PathBuf,
    /// Weight file with one `u v w` line per edge instance.
    #[arg(long, conflicts_with = "random_weights", required_unless_present = "random_weights")]
    pub weights: Option<PathBuf>,
    /// Draw the weights instead of reading them.
    #[arg(long, value_enum)]
    pub random_weights: Option<RandomWeights>,
    #[arg(long)]
    pub p: u64,
    /// Weight range; defaults to `(p - 1) / 2`.
    #[arg(long = "L", alias = "l")]
    pub l: Option<u64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CoverArgs {
    #[command(flatten)]
    pub source: WeightSource,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CoverStatsArgs {
    #[command(flatten)]
    pub source: WeightSource,
    /// Closed-walk length for the cycle-sum sample.
    #[arg(long, default_value_t = 6)]
    pub cycle_length: usize,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    /// Walk length for the walk-sum distribution.
    #[arg(long, default_value_t = 50)]
    pub t: usize,
    /// Expansion constant for the fiber-cut test; defaults to the base graph's Cheeger certificate.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Stats(a) => commands::stats(a),
        Command::MarkovTest(a) => commands::markov_test(a),
        Command::Decompose(a) => commands::decompose(a),
        Command::Verify(a) => commands::verify(a),
        Command::Cover(a) => commands::cover(a),
        Command::CoverStats(a) => commands::cover_stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
