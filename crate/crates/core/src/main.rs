use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use parest::experiment::{config::SCHEMA, run, write_outputs, ExperimentConfig, ExperimentKind};
use parest::Error;

#[derive(Parser)]
#[command(name = "parest", version, about = "A posteriori error estimation experiments for the heat equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML file.
    Run {
        config: PathBuf,
        /// Overrides `output.directory`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// List the available experiments.
    ListExperiments,
    /// Print the documented configuration schema with its defaults.
    Schema,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::ListExperiments => {
            for e in ExperimentKind::ALL {
                println!("{:<20} {}", e.name(), e.summary());
            }
            ExitCode::SUCCESS
        }
        Command::Schema => {
            print!("{SCHEMA}");
            ExitCode::SUCCESS
        }
        Command::Run { config, output } => match run_file(&config, output) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(Error::Config(msg)) => {
                eprintln!("config error: {msg}");
                ExitCode::from(2)
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}

fn run_file(path: &std::path::Path, output: Option<PathBuf>) -> parest::Result<bool> {
    let mut cfg = ExperimentConfig::from_file(path)?;
    if let Ok(v) = std::env::var("PAREST_THREADS") {
        cfg.threads = v
            .parse()
            .ok()
            .filter(|&t: &usize| t > 0)
            .ok_or_else(|| Error::Config(format!("PAREST_THREADS: {v:?} is not a positive integer")))?;
    }
    let dir = output.unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    std::fs::create_dir_all(&dir).map_err(|e| Error::Config(format!("output.directory: {}: {e}", dir.display())))?;
    let outcome = run(&cfg)?;
    let m = &outcome.manifest;
    for a in &m.assertions {
        let limit = a.limit.iter().map(|l| format!("{l:e}")).collect::<Vec<_>>().join(", ");
        println!(
            "{} {}: {:e} {} [{}]",
            if a.passed { "PASS" } else { "FAIL" },
            a.name,
            a.value,
            a.comparison,
            limit
        );
    }
    for p in write_outputs(&outcome, &dir)? {
        println!("wrote {}", p.display());
    }
    let failed = m.assertions.iter().filter(|a| !a.passed).count();
    println!("{}: {} assertions, {failed} failed", m.experiment, m.assertions.len());
    Ok(m.passed)
}
