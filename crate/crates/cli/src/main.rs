//! `nsg`: verification suites, solver runs and trajectory probes.

mod probe;
mod solve;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nsg_core::NsgError;

pub const EXIT_ERROR: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_BLOWUP: u8 = 3;
pub const EXIT_ASSERTION: u8 = 4;

#[derive(Parser)]
#[command(name = "nsg", version, about = "Gevrey-regularity experiments for the Navier-Stokes equations on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run invariant suites and write JSON reports.
    Verify {
        #[arg(value_enum)]
        suite: verify::Suite,
        #[arg(long, default_value = "reports")]
        out: PathBuf,
    },
    /// Integrate a run config and write the trajectory, norms and manifest.
    Solve {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Measure a stored trajectory and emit CSV.
    Probe(probe::ProbeArgs),
}

fn exit_code(e: &NsgError) -> u8 {
    match e {
        NsgError::Config { .. } => EXIT_CONFIG,
        NsgError::Blowup { .. } | NsgError::Overflow { .. } | NsgError::FixedPointFailure { .. } => EXIT_BLOWUP,
        _ => EXIT_ERROR,
    }
}

fn init_threads() {
    let Ok(v) = std::env::var("NSG_THREADS") else { return };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("warning: NSG_THREADS ignored: {e}");
            }
        }
        _ => eprintln!("warning: NSG_THREADS={v:?} is not a positive integer, ignored"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let result = match cli.command {
        Command::Verify { suite, out } => verify::run(suite, &out),
        Command::Solve { config, out } => solve::run(&config, &out),
        Command::Probe(args) => probe::run(&args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            if let NsgError::FixedPointFailure { report } = &e {
                eprintln!("  stop reason: {}", report.stop_reason);
                eprintln!("  residuals: {:?}", report.residuals);
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
