mod commands;
mod io;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use io::{CliError, CliResult};

/// Numerical lab for scattering maps, holomorphic disks and their lifts.
#[derive(Debug, Parser)]
#[command(name = "miniweyl", version)]
struct Cli {
    /// Directory receiving the artifacts and the run manifest.
    #[arg(long, global = true, default_value = "miniweyl-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Boundary and area checks on random de Sitter disks.
    Desitter(commands::DesitterArgs),
    /// Einstein-Weyl residuals and the compactness checklist of a structure.
    CheckEw(commands::CheckEwArgs),
    /// Samples the scattering map on a grid (CSV plus arrow plot).
    Scatter(commands::ScatterArgs),
    /// Solves for one holomorphic disk.
    Weld(commands::WeldArgs),
    /// Tangent space and conformal form at a solved disk.
    Moduli(commands::ModuliArgs),
    /// Traces a one-parameter family of disks (JSON lines plus curve plot).
    Geodesic(commands::GeodesicArgs),
    /// Recovers the boundary map from null-family endpoints.
    Roundtrip(commands::RoundtripArgs),
    /// Lifts a disk to projective 3-space and checks the boundary conditions.
    Lift(commands::LiftArgs),
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("MINIWEYL_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("MINIWEYL_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<PathBuf> {
    configure_threads()?;
    let out = &cli.out;
    match &cli.command {
        Command::Desitter(a) => commands::desitter(a, out),
        Command::CheckEw(a) => commands::check_ew(a, out),
        Command::Scatter(a) => commands::scatter(a, out),
        Command::Weld(a) => commands::weld(a, out),
        Command::Moduli(a) => commands::moduli(a, out),
        Command::Geodesic(a) => commands::geodesic(a, out),
        Command::Roundtrip(a) => commands::roundtrip(a, out),
        Command::Lift(a) => commands::lift(a, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
