use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spincavity_cli::{execute, init_thread_pool_from_env, parse_config, ConfigError};

/// Spin-cavity Bell-state analyzer simulator: parameter sweeps, protocol
/// runs, spin-echo and loss-resistance Monte Carlo with reproducible,
/// seed-determined artifacts.
#[derive(Parser)]
#[command(name = "spincavity", version, about)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Fidelity/efficiency metrics over a coupling-strength × loss-ratio grid (CSV)
    Sweep(RunArgs),
    /// Bell-state analysis branches or sampled shots (JSON lines)
    Bsa(RunArgs),
    /// State teleportation branches or sampled shots (JSON lines)
    Teleport(RunArgs),
    /// Entanglement swapping branches or sampled shots (JSON lines)
    Swap(RunArgs),
    /// Spin-echo coherence estimate (JSON lines)
    Echo(RunArgs),
    /// Loss-resistance Monte Carlo of a heralded link (JSON lines)
    Link(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to a .toml or .json run configuration
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the artifact output path
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    init_thread_pool_from_env();
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        CliCommand::Sweep(a) => ("sweep", a),
        CliCommand::Bsa(a) => ("bsa", a),
        CliCommand::Teleport(a) => ("teleport", a),
        CliCommand::Swap(a) => ("swap", a),
        CliCommand::Echo(a) => ("echo", a),
        CliCommand::Link(a) => ("link", a),
    };
    match run(name, args) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn run(name: &str, args: &RunArgs) -> Result<String, String> {
    let mut config = parse_config(&args.config).map_err(|e| e.to_string())?;
    if config.command.name() != name {
        return Err(ConfigError::CommandMismatch {
            config: config.command.name().to_string(),
            invoked: name.to_string(),
        }
        .to_string());
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let summary = execute(&config, args.out.as_deref()).map_err(|e| e.to_string())?;
    Ok(summary.line)
}
