use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use discourse_miner::pipeline::{Command, Pipeline};

#[derive(Parser)]
#[command(
    name = "discourse-miner",
    version,
    about = "Batch analysis of short-text health discourse"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    Ingest,
    Classify,
    Geocode,
    Sentiment,
    TopicsFit,
    TopicsInfer,
    Trend,
    Correlate,
    PaSubset,
    Report,
    /// Every stage in order.
    Run,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let Some(config) = cli.config else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(2);
    };
    let result = Pipeline::from_file(&config, cli.seed, cli.out).and_then(|p| match cli.command {
        Cmd::Run => p.run_all(),
        c => p.run(stage(c)).map(|_| ()),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}

fn stage(c: Cmd) -> Command {
    match c {
        Cmd::Ingest => Command::Ingest,
        Cmd::Classify => Command::Classify,
        Cmd::Geocode => Command::Geocode,
        Cmd::Sentiment => Command::Sentiment,
        Cmd::TopicsFit => Command::TopicsFit,
        Cmd::TopicsInfer => Command::TopicsInfer,
        Cmd::Trend => Command::Trend,
        Cmd::Correlate => Command::Correlate,
        Cmd::PaSubset => Command::PaSubset,
        Cmd::Report => Command::Report,
        Cmd::Run => unreachable!(),
    }
}
