use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use sharedlink::{parse_config, run, CliError, Command};

#[derive(Parser)]
#[command(version, about = "Simulate and analyze two Markov-modulated flows sharing a link")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one run; writes trajectory.csv and stats.json.
    Simulate(Common),
    /// Classify the configured priority; writes classification.json.
    Classify(Common),
    /// Classify a grid of F3 and phi1 values; writes sweep.csv.
    Sweep(Common),
    /// Check the Lyapunov drift condition; writes drift_report.json.
    DriftCheck(Common),
    /// Estimate stability from an ensemble of runs; writes estimate.json.
    /// Exits with status 2 when the queues grow.
    Estimate(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Directory for output files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Do not print the report on standard output.
    #[arg(long)]
    quiet: bool,
}

fn execute(command: Command, args: &Common) -> Result<i32, CliError> {
    let mut cfg = parse_config(&args.config, command)?;
    if let Some(seed) = args.seed {
        cfg.set_seed(seed);
    }
    let outcome = run(&cfg, &args.out)?;
    if !args.quiet {
        print!("{}", outcome.report);
        let _ = std::io::stdout().flush();
    }
    Ok(outcome.exit)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.kind().as_str().map_or_else(|| e.to_string(), str::to_owned);
            eprintln!("{}", CliError::Usage(message).to_json_line());
            return ExitCode::from(1);
        }
    };
    let (command, args) = match &cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Classify(a) => (Command::Classify, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::DriftCheck(a) => (Command::DriftCheck, a),
        Cmd::Estimate(a) => (Command::Estimate, a),
    };
    match execute(command, args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(1)
        }
    }
}
