use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ddrom_cli::commands::{self, RunOptions};
use ddrom_cli::config::PipelineConfig;

#[derive(Parser)]
#[command(name = "ddrom", version, about = "Learn and evaluate domain-decomposed Operator Inference reduced models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Pipeline configuration (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding the configured one
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Prediction steps
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Seed for synthetic noise, overriding the configured one
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a full-order model and write a SNAP file
    Gen,
    /// Write subdomain memberships and blending weights
    Decompose,
    /// Write per-subdomain singular values
    Svdreport,
    /// Train the reduced model and write the DDRM artifact
    Train,
    /// Run the regularization search only
    Regsearch,
    /// Integrate the trained model and write the predicted trajectory
    Predict,
    /// Compare a prediction against the truth and write the report CSVs
    Evaluate,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(out) = cli.output {
        cfg.paths.output_dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let opts = RunOptions { steps: cli.steps };
    match cli.command {
        Command::Gen => commands::cmd_gen(&cfg).map(drop),
        Command::Decompose => commands::cmd_decompose(&cfg),
        Command::Svdreport => commands::cmd_svdreport(&cfg),
        Command::Train => commands::cmd_train(&cfg).map(drop),
        Command::Regsearch => commands::cmd_regsearch(&cfg),
        Command::Predict => commands::cmd_predict(&cfg, opts).map(drop),
        Command::Evaluate => commands::cmd_evaluate(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
