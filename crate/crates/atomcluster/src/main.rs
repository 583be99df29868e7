use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use atomcluster::{execute, CliResult, Command, Format, Invocation};
use clap::Parser;

#[derive(Debug, Parser)]
#[command(name = "atomcluster", version, about = "Heralded cluster-state generation with atoms in cavities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration (or, for `network`, a network document).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random draw; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of sampled trials; overrides the config.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Skip sampling and report the exact tables only.
    #[arg(long, global = true)]
    exact_only: bool,
}

fn run(cli: &Cli) -> CliResult<bool> {
    let mut inv = Invocation::load(cli.config.as_deref())?;
    inv.seed = cli.seed;
    inv.trials = cli.trials;
    inv.exact_only = cli.exact_only;
    let report = execute(cli.command, &inv)?;
    let text = report.render(cli.format)?;
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    report.check_summary(std::io::stderr().lock())?;
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: required checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.to_exit()
        }
    }
}
