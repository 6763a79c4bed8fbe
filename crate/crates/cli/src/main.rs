//! `hetlink`: train, evaluate and analyse factorized link predictors.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use config::{CommonArgs, RunConfig};

#[derive(Parser)]
#[command(name = "hetlink", version, about = "Link prediction with disentangled factor embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and write its checkpoint, trace and metrics.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        /// Reuse a saved split instead of drawing one from --seed.
        #[arg(long = "split-file")]
        split_file: Option<PathBuf>,
    },
    /// Score a saved checkpoint on a saved split.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long = "split-file")]
        split_file: PathBuf,
    },
    /// Common-neighbor and Adamic-Adar scores over repeated splits.
    Baseline {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// All four variants plus a single-factor model over repeated splits.
    Ablate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Repeat the experiment across a grid of one hyperparameter.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// k | beta | tau
        #[arg(long, default_value = "k")]
        axis: String,
        /// Comma-separated grid; defaults to 1..10 for k, 0..1 by 0.1 for beta, {0.1, 1} for tau.
        #[arg(long)]
        values: Option<String>,
    },
    /// Print the edge homophily ratio.
    Homophily {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Export the embedding correlation matrix and its block contrast.
    Corr {
        #[command(flatten)]
        common: CommonArgs,
        /// Analyse this checkpoint instead of training a new model.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long = "split-file")]
        split_file: Option<PathBuf>,
    },
    /// Draw and save an edge split.
    Split {
        #[command(flatten)]
        common: CommonArgs,
        /// Output file (default: <out-dir>/<dataset>_split_seed<seed>.txt).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    use Command::*;
    let common = match &cli.command {
        Train { common, .. }
        | Eval { common, .. }
        | Baseline { common }
        | Ablate { common }
        | Sweep { common, .. }
        | Homophily { common }
        | Corr { common, .. }
        | Split { common, .. } => common,
    };
    let cfg = RunConfig::resolve(common)?;
    match &cli.command {
        Train { split_file, .. } => commands::train_cmd(&cfg, split_file.as_deref()),
        Eval { checkpoint, split_file, .. } => commands::eval_cmd(&cfg, checkpoint, split_file),
        Baseline { .. } => commands::baseline_cmd(&cfg),
        Ablate { .. } => commands::ablate_cmd(&cfg),
        Sweep { axis, values, .. } => commands::sweep_cmd(&cfg, &axis.to_lowercase(), values.as_deref()),
        Homophily { .. } => commands::homophily_cmd(&cfg),
        Corr { checkpoint, split_file, .. } => {
            commands::corr_cmd(&cfg, checkpoint.as_deref(), split_file.as_deref())
        }
        Split { output, .. } => commands::split_cmd(&cfg, output.as_deref()),
    }
}

fn category(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<hetlink::Error>() {
            return e.category();
        }
        if cause.downcast_ref::<hetlink_autodiff::AutodiffError>().is_some() {
            return "checkpoint";
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return "io";
        }
    }
    "internal"
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error[usage]: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error[{}]: {msg}", category(&e));
            ExitCode::FAILURE
        }
    }
}
