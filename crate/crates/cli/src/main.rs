use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cavity_bic_cli::{resolve, run, CliError, Experiment, TOLERANCE_EXIT};

/// Trapped states of two atomic ensembles in a coupled-cavity array.
///
/// Frequencies, rates and times are in units of the inter-cavity hopping
/// lambda. Exit status: 0 success, 1 invalid configuration, 2 numerical
/// failure, 3 a check missed its tolerance.
#[derive(Parser)]
#[command(name = "cavity-bic", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coefficients, residuals and oracle overlap of one trapped state.
    Bic(Common),
    /// Photon and atom content of the trapped state over a chi grid.
    SweepChi(Common),
    /// Master-equation relaxation into trapped states.
    Evolve(Common),
    /// Quality factor of the trapped linear mode against detuning.
    Qfactor(Common),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output file; standard output when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Random initial atomic state (evolve).
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(experiment: Experiment, c: &Common) -> Result<Vec<String>, CliError> {
    let file = match &c.config {
        Some(path) => Some(
            fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?,
        ),
        None => None,
    };
    let config = resolve(experiment, file.as_deref(), &c.set, c.seed)?;
    let report = run(&config)?;
    match &c.out {
        Some(path) => fs::write(path, &report.text)?,
        None => std::io::stdout().lock().write_all(report.text.as_bytes())?,
    }
    Ok(report.violations)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (experiment, common) = match &cli.command {
        Command::Bic(c) => (Experiment::Bic, c),
        Command::SweepChi(c) => (Experiment::SweepChi, c),
        Command::Evolve(c) => (Experiment::Evolve, c),
        Command::Qfactor(c) => (Experiment::Qfactor, c),
    };
    match execute(experiment, common) {
        Ok(violations) if violations.is_empty() => ExitCode::SUCCESS,
        Ok(violations) => {
            for v in violations {
                eprintln!("check failed: {v}");
            }
            ExitCode::from(TOLERANCE_EXIT)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
