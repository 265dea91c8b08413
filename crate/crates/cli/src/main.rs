//! Command-line front end for the `taskdiff` library.
//!
//! Data goes to files under `--out` or to stdout; errors go to stderr as one
//! JSON record, with exit codes 1 (I/O), 2 (usage), 3 (data), 4 (numerical).

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "taskdiff",
    version,
    about = "Distributional distance between task-oriented conversations"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// EMBV1 embedding file.
    #[arg(long, global = true)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 2.0)]
    pub gamma_intents: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    pub gamma_utterances: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    pub gamma_slots: f64,
    /// Mask slot values (default for taskdiff).
    #[arg(long, global = true, overrides_with = "no_mask")]
    pub mask: bool,
    /// Keep raw slot values (default for baselines).
    #[arg(long, global = true, overrides_with = "mask")]
    pub no_mask: bool,
    /// Whether system turns contribute utterances.
    #[arg(
        long,
        global = true,
        default_value_t = true,
        num_args = 0..=1,
        default_missing_value = "true",
        action = ArgAction::Set
    )]
    pub include_system: bool,
    #[arg(long, global = true, value_enum, default_value_t = SolverArg::Exact)]
    pub solver: SolverArg,
    /// Sinkhorn regularization.
    #[arg(long, global = true, default_value_t = 0.01)]
    pub epsilon: f64,
    /// Sinkhorn iteration budget.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    pub max_iters: usize,
    /// Sinkhorn marginal tolerance.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
    /// Charge this W1 when a component is empty on one side only, instead of
    /// skipping the term.
    #[arg(long, global = true)]
    pub max_penalty: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Canonical)]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Exact,
    Sinkhorn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Canonical,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Taskdiff,
    SbertCosine,
    Conved,
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArg {
    /// Corpus directory (canonical or SGD) or SGD dialogues file.
    #[arg(long)]
    pub corpus: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct OutArg {
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the embedding keys a corpus needs, one per line.
    Keys {
        #[command(flatten)]
        corpus: CorpusArg,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Both masked and raw utterance texts, as ablation needs.
        #[arg(long)]
        all_variants: bool,
    },
    /// Print the component distributions of one conversation as JSON.
    Profile {
        #[command(flatten)]
        corpus: CorpusArg,
        id: String,
    },
    /// Distance between two conversations, with per-component terms.
    Dist {
        #[command(flatten)]
        corpus: CorpusArg,
        id1: String,
        id2: String,
        #[arg(long, value_enum, default_value_t = MetricArg::Taskdiff)]
        metric: MetricArg,
    },
    /// Pairwise distance matrix.
    Matrix {
        #[command(flatten)]
        corpus: CorpusArg,
        #[command(flatten)]
        out: OutArg,
        #[arg(long, value_enum, default_value_t = MetricArg::Taskdiff)]
        metric: MetricArg,
    },
    /// Cross-validated k-NN domain classification.
    Knn {
        #[command(flatten)]
        corpus: CorpusArg,
        #[command(flatten)]
        out: OutArg,
        #[arg(long, value_enum, default_value_t = MetricArg::Taskdiff)]
        metric: MetricArg,
        /// Reuse a DMATV1 matrix instead of computing one.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 5)]
        folds: usize,
    },
    /// k-medoids clustering with purity and 2D coordinates.
    Cluster {
        #[command(flatten)]
        corpus: CorpusArg,
        #[command(flatten)]
        out: OutArg,
        #[arg(long, value_enum, default_value_t = MetricArg::Taskdiff)]
        metric: MetricArg,
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Number of clusters (default: number of domains).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 100)]
        iterations: usize,
    },
    /// k-NN accuracy of the standard ablation configurations.
    Ablate {
        #[command(flatten)]
        corpus: CorpusArg,
        #[command(flatten)]
        out: OutArg,
        #[arg(long, default_value_t = taskdiff::eval::ABLATION_SAMPLE)]
        sample: usize,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 5)]
        folds: usize,
    },
    /// Distance between each conversation and a turn-reordered copy.
    Perturb {
        #[command(flatten)]
        corpus: CorpusArg,
        #[command(flatten)]
        out: OutArg,
        #[arg(long, default_value_t = 0.3)]
        fraction: f64,
        /// Repeatable (default: taskdiff and conved).
        #[arg(long, value_enum)]
        metric: Vec<MetricArg>,
    },
    /// Write an EMBV1 file for a key list with the deterministic hashing
    /// embedder. Stands in for a neural exporter in tests and smoke runs.
    HashEmbed {
        /// Key list as written by `keys`.
        #[arg(long)]
        keys: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 384)]
        dim: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string();
            let message = first
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            eprintln!("{}", CliError::usage(message).record());
            return ExitCode::from(2);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn global_flags_parse_after_subcommand() {
        let cli = Cli::try_parse_from([
            "taskdiff",
            "dist",
            "--corpus",
            "c",
            "a",
            "b",
            "--no-mask",
            "--include-system=false",
            "--solver",
            "sinkhorn",
        ])
        .unwrap();
        assert!(cli.global.no_mask && !cli.global.mask);
        assert!(!cli.global.include_system);
        assert_eq!(cli.global.solver, SolverArg::Sinkhorn);
    }

    #[test]
    fn bare_include_system_means_true() {
        let cli =
            Cli::try_parse_from(["taskdiff", "keys", "--corpus", "c", "--include-system"]).unwrap();
        assert!(cli.global.include_system);
    }
}
