use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fluxdirac_cli::config::{env_threads, RunConfig};
use fluxdirac_cli::{commands, Result};

#[derive(Parser)]
#[command(name = "fluxdirac", version, about = "Dirac-Weyl states and spectra in a localized magnetic flux")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(short, long, default_value = "fluxdirac.toml", global = true)]
    config: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Total flux, N and the zero-mode branch.
    Flux,
    /// Auxiliary potential and gauge field on the grid, with curl and asymptote checks.
    Lambda,
    /// Zero-mode spinors and their integrability.
    ZeroModes,
    /// Ladder states up to m_max.
    Ladder,
    /// Tail exponents and truncated norms of ladder states.
    TailReport,
    /// Analyzer and paper degeneracy counts per level.
    Degeneracy,
    /// Lattice eigenvalues near the configured targets.
    OracleSpectrum,
    /// The full verification suite.
    Verify,
}

fn run(cli: &Cli) -> Result<i32> {
    let cfg = RunConfig::load(&cli.config)?;
    if let Some(n) = env_threads()? {
        set_threads(n)?;
    }
    let outcome = match cli.command {
        Command::Flux => commands::flux(&cfg),
        Command::Lambda => commands::lambda(&cfg),
        Command::ZeroModes => commands::zero_modes(&cfg),
        Command::Ladder => commands::ladder(&cfg),
        Command::TailReport => commands::tail_report(&cfg),
        Command::Degeneracy => commands::degeneracy(&cfg),
        Command::OracleSpectrum => commands::oracle_spectrum(&cfg),
        Command::Verify => commands::verify(&cfg),
    }?;
    print!("{}", outcome.stdout);
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(outcome.code)
}

#[cfg(feature = "parallel")]
fn set_threads(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| fluxdirac_cli::CliError::Config(format!("thread pool: {e}")))
}

#[cfg(not(feature = "parallel"))]
fn set_threads(_: usize) -> Result<()> {
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
