use std::path::PathBuf;
use std::process::ExitCode;

use backflow_cli::{config, runner, CliError};
use backflow_core::{scenarios, selftest};
use clap::{Parser, Subcommand};

/// Information backflow analysis of two-step open-system models.
#[derive(Parser)]
#[command(name = "backflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the single scenario in a configuration file.
    Run {
        config: PathBuf,
        /// Report path (JSON); overrides `output.report`.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// CSV sidecar path; overrides `output.csv`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Evaluate the sampled models described by the `sweep` section.
    Sweep {
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print the built-in scenario names.
    ListScenarios,
    /// Run the numerical self-test suites.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn configure_workers() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("BACKFLOW_WORKERS") {
        let n: usize = v.parse().map_err(|_| {
            CliError::Config(format!(
                "BACKFLOW_WORKERS must be a non-negative integer, got `{v}`"
            ))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_workers()?;
    match cli.command {
        Command::Run {
            config,
            output,
            csv,
        } => {
            let cfg = config::load(&config)?;
            let report = runner::run(&cfg)?;
            runner::emit(&report, output.as_deref(), csv.as_deref())
        }
        Command::Sweep {
            config,
            output,
            csv,
        } => {
            let cfg = config::load(&config)?;
            let report = runner::sweep(&cfg)?;
            runner::emit(&report, output.as_deref(), csv.as_deref())
        }
        Command::ListScenarios => {
            for (name, description) in scenarios::SCENARIO_NAMES {
                println!("{name:<16} {description}");
            }
            println!("{:<16} model given in full in the configuration", "inline");
            Ok(())
        }
        Command::Selftest { seed } => {
            let report = selftest::run_all(seed)?;
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Invariant(format!("report encoding: {e}")))?;
            println!("{json}");
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::Invariant("self-test suites failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("backflow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
