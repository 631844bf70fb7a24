use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cpphi_cli::commands::{execute, Command};
use cpphi_cli::config::{ExperimentConfig, THREADS_ENV};
use cpphi_cli::output::{write_record, write_trace, RunRecord};
use cpphi_cli::{exit, golden, CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "cpphi", version, about = "Lattice-cutoff experiments for charged P(phi)_2 Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Stability threshold lambda_quant with c0, c1 and the one-particle block minimum.
    LambdaQuant { config: PathBuf },
    /// Classical positivity and polar decomposition of the quantized dynamics.
    Quantize { config: PathBuf },
    /// Low-lying spectrum of the cutoff Hamiltonian.
    Spectrum { config: PathBuf },
    /// Ground energy, gap and one-particle branch onset per refinement level.
    Hvz { config: PathBuf },
    /// Resolvent differences and N-resolvent norms across refinement levels.
    Convergence { config: PathBuf },
    /// Heisenberg-picture field expectations of a wave packet in the ground state.
    ProbeScattering { config: PathBuf },
    /// Schema and range checks only.
    Validate { config: PathBuf },
    /// Recompute pinned values and compare within their tolerances.
    GoldenCheck { suite: PathBuf },
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV}={raw:?} is not a positive integer")))?;
    // a second initialization in the same process is harmless
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn run_command(cmd: Command, path: &Path) -> CliResult<()> {
    let cfg = ExperimentConfig::load(path)?;
    let hash = cfg.hash();
    let outcome = execute(cmd, &cfg)?;
    let dir = cfg.output_dir();
    let record = RunRecord::new(cmd.name(), hash.clone(), outcome.report);
    let json = write_record(&dir, &record)?;
    println!("{} ok (config {})", cmd.name(), &hash[..16]);
    println!("report: {}", json.display());
    if let Some(trace) = outcome.trace {
        println!("trace: {}", write_trace(&dir, cmd.name(), &trace)?.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| match &cli.command {
        Sub::LambdaQuant { config } => run_command(Command::LambdaQuant, config),
        Sub::Quantize { config } => run_command(Command::Quantize, config),
        Sub::Spectrum { config } => run_command(Command::Spectrum, config),
        Sub::Hvz { config } => run_command(Command::Hvz, config),
        Sub::Convergence { config } => run_command(Command::Convergence, config),
        Sub::ProbeScattering { config } => run_command(Command::ProbeScattering, config),
        Sub::Validate { config } => run_command(Command::Validate, config),
        Sub::GoldenCheck { suite } => golden::check(suite).map(|_| ()),
    });
    match result {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            eprintln!("error [{}]: {e}", e.invariant());
            ExitCode::from(e.exit_code())
        }
    }
}
