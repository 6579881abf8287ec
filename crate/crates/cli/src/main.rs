use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser};
use pauli_robin_cli::{run, Family, RunError, Subcommand};

/// Spectra of one-dimensional Pauli Hamiltonians with matrix Robin
/// boundary conditions.
#[derive(Parser)]
#[command(name = "pauli-robin", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration file.
    #[arg(short, long)]
    config: PathBuf,

    /// Write the CSV here instead of the `[output] path` or stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Symmetry flags of the boundary pair.
    Classify(Common),
    /// Eigenvalues in the search window.
    Spectrum(Common),
    /// Eigencurves over a boundary family.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// exA, exB, exPT, bc-energy or custom; overrides `[sweep] family`.
        #[arg(long)]
        family: Option<String>,
    },
    /// Upper boundary of the parabolic spectral enclosure.
    Enclosure(Common),
    /// Smallest singular values of the discretized shifted operator.
    Pseudospectrum(Common),
    /// Perfect-transmission energies of the potential.
    Pte(Common),
    /// Theta-Gram matrix of the lowest eigenfunctions and metric positivity.
    Metric(Common),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pauli-robin: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<(), RunError> {
    let (sub, common, family) = match command {
        Command::Classify(c) => (Subcommand::Classify, c, None),
        Command::Spectrum(c) => (Subcommand::Spectrum, c, None),
        Command::Sweep { common, family } => (Subcommand::Sweep, common, family),
        Command::Enclosure(c) => (Subcommand::Enclosure, c, None),
        Command::Pseudospectrum(c) => (Subcommand::Pseudospectrum, c, None),
        Command::Pte(c) => (Subcommand::Pte, c, None),
        Command::Metric(c) => (Subcommand::Metric, c, None),
    };
    let family = family
        .map(|f| {
            Family::parse(&f).ok_or_else(|| {
                pauli_robin_cli::ConfigError::Invalid(format!(
                    "unknown family `{f}`; expected exA, exB, exPT, bc-energy or custom"
                ))
            })
        })
        .transpose()?;
    let text = std::fs::read_to_string(&common.config)?;
    let csv = run(sub, &text, family)?;
    let target = common
        .output
        .or_else(|| pauli_robin_cli::parse_config(&text).ok().and_then(|c| c.output.path).map(PathBuf::from));
    match target {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}
