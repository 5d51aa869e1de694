//! `tailqa` command-line driver.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "tailqa",
    version,
    about = "Long-tail entity QA: datasets, retrieval, LM runs and adaptive retrieval"
)]
pub struct Cli {
    /// TOML experiment manifest. Flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample knowledge triples and verbalize them into questions.
    BuildDataset(commands::BuildDatasetArgs),
    /// Annotate a dataset with monthly page views of each subject.
    FetchPopularity(commands::FetchPopularityArgs),
    /// Build a BM25 index over a passage corpus.
    Index(commands::IndexArgs),
    /// Answer every question in one prompting mode.
    Run(commands::RunArgs),
    /// Accuracy, correlation, binned accuracy, quadrants and adaptive summary.
    Report(commands::ReportArgs),
    /// Tune per-relation popularity thresholds.
    Tune(commands::TuneArgs),
    /// Show the retrieval decision for every question.
    Route(commands::RouteArgs),
    /// Token cost and latency of a policy against always retrieving.
    Savings(commands::SavingsArgs),
    /// Run the whole pipeline on a synthetic world with the oracle LM.
    Demo(commands::DemoArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    match commands::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", one_line(&e));
            ExitCode::from(1)
        }
    }
}

/// Error chain on a single line, skipping causes already quoted by their parent.
fn one_line(e: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in e.chain() {
        let s = cause.to_string();
        if msg.contains(&s) {
            continue;
        }
        if !msg.is_empty() {
            msg.push_str(": ");
        }
        msg.push_str(&s);
    }
    msg.replace('\n', " ")
}
