use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use nsg_core::diagnostics::{derivative_decay_probe, f_n_besov_series, radius_scaling_probe, DEFAULT_KAPPA};
use nsg_core::mild::{SolutionTrajectory, SolverConfig};
use nsg_core::report::{write_atomic, write_decay_csv, write_gevrey_csv, write_radius_csv};
use nsg_core::snapshot::read_trajectory;
use nsg_core::{build_filter_bank, Exponent, MultiIndex, NsgError, Result};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Kind {
    Radius,
    Decay,
    Gevrey,
    Fn,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(value_enum)]
    kind: Kind,
    /// Trajectory file written by `nsg solve`.
    trajectory: PathBuf,
    #[arg(long, default_value_t = DEFAULT_KAPPA)]
    kappa: f64,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Summability index; a number or `inf`.
    #[arg(long, default_value = "2")]
    q: Exponent,
    /// Time-derivative order (decay and fn).
    #[arg(long, default_value_t = 0)]
    n: usize,
    /// Spatial multi-index for decay, e.g. `1,0`.
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<u32>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(path: &PathBuf, args: &ProbeArgs) -> Result<SolutionTrajectory> {
    let file = File::open(path)
        .map_err(|e| NsgError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let (times, velocity) = read_trajectory(&mut BufReader::new(file))?;
    let grid = *velocity[0].grid();
    let mut cfg = SolverConfig::new(grid, times.last().copied().unwrap_or(0.0), times.len().saturating_sub(1).max(1));
    cfg.norm_p = args.p;
    cfg.norm_q = args.q;
    SolutionTrajectory::new(cfg, times, velocity)
}

pub fn run(args: &ProbeArgs) -> Result<u8> {
    let mut traj = load(&args.trajectory, args)?;
    let bank = build_filter_bank(&traj.config.grid);
    if args.n > 0 && matches!(args.kind, Kind::Decay | Kind::Fn) {
        traj = traj.with_derivatives(args.n)?;
    }
    let mut buf = Vec::new();
    match args.kind {
        Kind::Radius => write_radius_csv(&mut buf, &radius_scaling_probe(&traj, args.kappa, args.p, args.q, &bank)?)?,
        Kind::Gevrey => write_gevrey_csv(&mut buf, 0, &f_n_besov_series(&traj, 0, args.p, args.q, &bank)?)?,
        Kind::Fn => write_gevrey_csv(&mut buf, args.n, &f_n_besov_series(&traj, args.n, args.p, args.q, &bank)?)?,
        Kind::Decay => {
            let alpha = if args.alpha.is_empty() { MultiIndex::new(&[])? } else { MultiIndex::new(&args.alpha)? };
            write_decay_csv(&mut buf, &derivative_decay_probe(&traj, alpha, args.n)?)?
        }
    }
    match &args.out {
        Some(path) => write_atomic(path, &buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(0)
}
