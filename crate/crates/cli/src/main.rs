mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Error caused by how the program was invoked. Exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "time2box", version, about = "Box embeddings for temporal knowledge bases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct DataArgs {
    /// Directory with train.txt, valid.txt and test.txt.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Token for a missing endpoint.
    #[arg(long, default_value = "-")]
    pub missing: String,
    /// Accept full dates with `#` placeholders and keep the year.
    #[arg(long)]
    pub lenient_dates: bool,
}

#[derive(Args, Clone)]
pub struct ModelArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Print statement counts per split and validity type.
    Stats {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Write a seeded synthetic dataset with its manifest.
    GenSynthetic(commands::GenArgs),
    /// Train a model and write a checkpoint and log.
    Train(commands::TrainArgs),
    /// Filtered link prediction report.
    EvalLink(commands::EvalLinkArgs),
    /// Interval prediction report.
    EvalTime(commands::EvalTimeArgs),
    /// Top entities for a query, or a per-year timeline for an interval.
    Predict(commands::PredictArgs),
    /// Append gIOU, aeIOU and gaeIOU to rows of `gold_lo gold_hi pred_lo pred_hi`.
    Metrics(commands::MetricsArgs),
    /// Write embeddings as a TSV of label and vector.
    ExportEmbeddings(commands::ExportArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Stats { data } => commands::stats(&data),
        Command::GenSynthetic(a) => commands::gen_synthetic(&a),
        Command::Train(a) => commands::train(&a),
        Command::EvalLink(a) => commands::eval_link(&a),
        Command::EvalTime(a) => commands::eval_time(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Metrics(a) => commands::metrics(&a),
        Command::ExportEmbeddings(a) => commands::export_embeddings(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_usage(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn is_usage(e: &anyhow::Error) -> bool {
    use time2box::Error;
    e.chain().any(|c| {
        c.is::<UsageError>()
            || matches!(
                c.downcast_ref::<Error>(),
                Some(Error::InvalidConfig(_) | Error::UnknownLabel { .. })
            )
    })
}
