//! `htgtriage`: corpus to developer recommendations, one artifact per step.
//!
//! Every command resolves a [`RunConfig`] from built-in defaults, then the
//! config file (`--config` or `$HTGTRIAGE_CONFIG`), then `--set key=value`
//! pairs, then its own flags.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "htgtriage",
    version,
    about = "Developer recommendation for issue trackers"
)]
struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Config override, repeatable; beats the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate raw record streams and store them as a corpus directory.
    Ingest(IngestArgs),
    /// Trace fixers through events and commits; writes the label table.
    Relabel(RelabelArgs),
    /// Extract typed edges from a corpus; writes the edge list.
    ExtractRelations(ExtractArgs),
    /// Slice labeled issues into snapshots; writes the graph file.
    BuildGraph(BuildGraphArgs),
    /// Train a model; writes a checkpoint directory.
    Train(TrainArgs),
    /// Score a checkpoint on the test slices; writes the report.
    Evaluate(EvaluateArgs),
    /// Rank developers for an issue that is not in the graph.
    Recommend(RecommendArgs),
    /// Train and test one model per time window size.
    SweepWindow(SweepArgs),
    /// Generate a synthetic corpus with planted module structure.
    Synth(SynthArgs),
    /// Summarize a corpus and, optionally, a graph.
    Stats(StatsArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    issues: PathBuf,
    #[arg(long)]
    comments: PathBuf,
    #[arg(long)]
    events: PathBuf,
    #[arg(long)]
    commits: PathBuf,
    /// Optional file-text stream.
    #[arg(long)]
    files: Option<PathBuf>,
    /// Corpus directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RelabelArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Label table.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    /// Edge list.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BuildGraphArgs {
    #[arg(long)]
    edges: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    slices: Option<usize>,
    /// Graph file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    tw: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Checkpoint directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Checkpoint file, or a checkpoint directory (its `best` is used).
    #[arg(long)]
    ckpt: Option<PathBuf>,
    /// Comma-separated cutoffs, e.g. `1,3,5`.
    #[arg(long)]
    topn: Option<String>,
    /// Report file.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Corpus directory; adds the activity table.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// `reciprocal_rank` or `top1`.
    #[arg(long)]
    pairing: Option<String>,
    /// Append per-issue ranked lists.
    #[arg(long)]
    rankings: bool,
}

#[derive(Args)]
struct RecommendArgs {
    /// One issue record as a JSON object.
    #[arg(long)]
    issue_file: PathBuf,
    #[arg(long, default_value_t = 5)]
    top: usize,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    ckpt: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Window sizes to try.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7")]
    tws: Vec<usize>,
    /// Train the window sizes concurrently.
    #[arg(long)]
    parallel: bool,
    /// Also write the table to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 5)]
    modules: usize,
    #[arg(long, default_value_t = 2)]
    devs_per_module: usize,
    #[arg(long, default_value_t = 500)]
    issues: usize,
    #[arg(long, default_value_t = 4)]
    files_per_module: usize,
    #[arg(long, default_value_t = 40)]
    vocab_per_module: usize,
    #[arg(long, default_value_t = 10)]
    slices: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Retirement `MODULE:DEVELOPER:SLICE`, repeatable.
    #[arg(long, value_name = "M:D:S")]
    drift: Vec<String>,
    /// Retire developer 0 of every module after slice 6.
    #[arg(long, conflicts_with = "drift")]
    drift_fixture: bool,
    /// Corpus directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Graph file; adds per-slice sizes.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Confidence level for the audit sample size.
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    /// Margin of error for the audit sample size.
    #[arg(long, default_value_t = 0.05)]
    margin: f64,
    /// Two files of one audit label per line; prints Cohen's kappa.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    kappa: Vec<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
