use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nlddm::runner::{self, threads_from_env};
use nlddm::{RunConfig, RunError};

/// Nonlocal diffusion solved by substructuring domain decomposition and
/// checked against the single-domain solve.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: solve both ways, check every invariant, write artifacts.
    Run { config: PathBuf },
    /// Pipeline through the coverage check only.
    Check { config: PathBuf },
    /// Assemble and write the selected artifacts that need no solve.
    Export { config: PathBuf },
}

fn execute(cli: Cli) -> Result<(), RunError> {
    let threads = threads_from_env();
    match cli.command {
        Command::Run { config } => {
            let cfg = RunConfig::load(&config)?;
            let out = runner::run(&cfg, threads)?;
            print!("{}", out.report);
            if !out.failures.is_empty() {
                return Err(RunError::Invariant(out.failures.join("; ")));
            }
        }
        Command::Check { config } => {
            let cfg = RunConfig::load(&config)?;
            let p = runner::prepare(&cfg, threads)?;
            println!("subdomains: {}", p.decomposition.num_subdomains());
            println!("interacting_pairs: {}", p.interactions.len());
            println!("coverage_checked_pairs: {}", p.coverage.checked_pairs);
            println!("zeta_a_min: {}", p.coverage.min_zeta_a);
            println!("zeta_a_max: {}", p.coverage.max_zeta_a);
            println!("status: ok");
        }
        Command::Export { config } => {
            let cfg = RunConfig::load(&config)?;
            for path in runner::export(&cfg, threads)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
