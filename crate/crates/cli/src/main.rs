//! `salience`: corpus labeling, training, ranking, evaluation and the
//! intrusion study from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error,
//! 3 numeric failure.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "salience", version, about = "Event salience detection toolkit")]
struct Cli {
    /// Worker threads; 1 gives bitwise-reproducible runs. Defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Filter event candidates and label salience against abstract lemmas.
    Annotate(AnnotateArgs),
    /// Print corpus statistics as JSON.
    Stats(StatsArgs),
    /// Build an event or entity vocabulary from a corpus.
    BuildVocab(BuildVocabArgs),
    /// Train a model.
    Train(TrainArgs),
    /// Write per-document rankings as JSONL.
    Rank(RankArgs),
    /// Evaluate a model or a baseline and write a metrics report.
    Evaluate(EvaluateArgs),
    /// Paired permutation test between two metrics reports.
    Sigtest(SigtestArgs),
    /// Run the event intrusion study.
    Intrude(IntrudeArgs),
    /// Compare a KCE model's gradients with finite differences.
    Gradcheck(GradcheckArgs),
    /// Export a KCE model's kernel weights as CSV.
    ExportKernelWeights(ExportArgs),
    /// Generate a synthetic corpus with planted salience.
    Synth(SynthArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct AnnotateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// JSON with `event_frames`, `light_verbs` and `reporting_verbs`.
    #[arg(long)]
    pub filter_config: Option<PathBuf>,
    /// Only filter; keep existing labels.
    #[arg(long)]
    pub no_label: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct StatsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Event,
    Entity,
}

#[derive(Debug, Args, Serialize)]
pub struct BuildVocabArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value = "event")]
    pub field: Field,
    #[arg(long, default_value_t = salience::embeddings::DEFAULT_MIN_COUNT)]
    pub min_count: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelChoice {
    Letor,
    /// Full KCE.
    Kce,
    /// KCE with event kernels only.
    KceE,
    /// KCE with event kernels and features.
    KceEf,
    Pagerank,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub model: ModelChoice,
    /// Training configuration JSON; missing fields take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub dev: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Pretrained event vectors (word2vec text format).
    #[arg(long)]
    pub event_vectors: Option<PathBuf>,
    #[arg(long)]
    pub entity_vectors: Option<PathBuf>,
    /// Vocabulary files from `build-vocab`; built from the training split otherwise.
    #[arg(long)]
    pub event_vocab: Option<PathBuf>,
    #[arg(long)]
    pub entity_vocab: Option<PathBuf>,
    #[arg(long, default_value_t = salience::embeddings::DEFAULT_MIN_COUNT)]
    pub min_count: usize,
    /// Embedding width; defaults to the pretrained vectors' width, else 128.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-epoch history CSV; defaults to `<out>.history.csv`.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct RankArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    Frequency,
    Location,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long, conflicts_with = "baseline", required_unless_present = "baseline")]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Seed for random tie-breaking; models break ties by event id unless given.
    #[arg(long)]
    pub tie_seed: Option<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = salience::eval::DEFAULT_CUTOFFS)]
    pub cutoffs: Vec<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct SigtestArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// `auc`, `p@k` or `r@k`.
    #[arg(long, default_value = "auc")]
    pub metric: String,
    #[arg(long, default_value_t = 100_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Salient,
    Nonsalient,
}

#[derive(Debug, Args, Serialize)]
pub struct IntrudeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value = "nonsalient")]
    pub kind: Kind,
    #[arg(long, default_value_t = 500)]
    pub pairs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct GradcheckArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Documents checked, from the start of the corpus.
    #[arg(long, default_value_t = 10)]
    pub docs: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub step: f64,
    /// Exit with status 3 when the worst relative error exceeds this.
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    /// Check only the linear weights.
    #[arg(long)]
    pub freeze_embeddings: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ExportArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Generator configuration JSON; missing fields take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory receiving the splits, vectors and pools.
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn dispatch(command: Command) -> error::CliResult<()> {
    match command {
        Command::Annotate(a) => commands::annotate(&a),
        Command::Stats(a) => commands::stats(&a),
        Command::BuildVocab(a) => commands::build_vocab(&a),
        Command::Train(a) => commands::train(&a),
        Command::Rank(a) => commands::rank(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Sigtest(a) => commands::sigtest(&a),
        Command::Intrude(a) => commands::intrude(&a),
        Command::Gradcheck(a) => commands::gradcheck(&a),
        Command::ExportKernelWeights(a) => commands::export_kernel_weights(&a),
        Command::Synth(a) => commands::synth(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.threads {
        Some(0) => Err(error::usage("--threads must be positive")),
        Some(n) => salience::par::with_threads(n, || dispatch(cli.command)),
        None => dispatch(cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            f.code()
        }
    }
}
