use std::path::Path;

use nsg_core::config::{Method, RunConfig};
use nsg_core::lp::{besov_norm, build_filter_bank, NormSpec};
use nsg_core::mild::{picard_solve, step_solve, PicardReport, SolverConfig};
use nsg_core::report::{fmt_f64, write_atomic};
use nsg_core::snapshot::write_trajectory;
use nsg_core::{NsgError, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const TRAJECTORY_FILE: &str = "trajectory.nsg";
pub const NORMS_FILE: &str = "norms.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PICARD_FILE: &str = "picard.json";

#[derive(Serialize)]
struct RunManifest<'a> {
    subcommand: &'static str,
    config_path: String,
    config_sha256: String,
    config: &'a RunConfig,
    solver: &'a SolverConfig,
    seed: Option<u64>,
    output_dir: String,
    outputs: Vec<&'static str>,
    version: &'static str,
}

fn to_json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    serde_json::to_vec_pretty(v).map_err(|e| NsgError::Format(e.to_string()))
}

pub fn run(config_path: &Path, out: &Path) -> Result<u8> {
    let src = std::fs::read(config_path)?;
    let text = String::from_utf8(src.clone())
        .map_err(|_| NsgError::Config { line: None, message: "config is not UTF-8".into() })?;
    let cfg = RunConfig::parse(&text)?;
    let solver = cfg.solver_config()?;
    let u0 = cfg.initial_velocity()?;

    let mut outputs = vec![TRAJECTORY_FILE, NORMS_FILE, MANIFEST_FILE];
    let traj = match cfg.solver.method {
        Method::Step => step_solve(&u0, &solver)?,
        Method::Picard => {
            let (traj, report) = picard_solve(&u0, &solver)?;
            write_atomic(&out.join(PICARD_FILE), &to_json::<PicardReport>(&report)?)?;
            outputs.push(PICARD_FILE);
            traj
        }
    };

    let mut buf = Vec::new();
    write_trajectory(&mut buf, &traj.times, &traj.velocity)?;
    write_atomic(&out.join(TRAJECTORY_FILE), &buf)?;

    let bank = build_filter_bank(&solver.grid);
    let spec = NormSpec::critical(solver.norm_p, solver.norm_q)?;
    let mut norms = String::from("t,l2,besov\n");
    let mut last = (0.0, 0.0, 0.0);
    for (t, u) in traj.times.iter().zip(&traj.velocity) {
        let l2 = u.l2_norm();
        let b = besov_norm(u, &spec, &bank)?;
        norms.push_str(&format!("{},{},{}\n", fmt_f64(*t), fmt_f64(l2), fmt_f64(b)));
        last = (*t, l2, b);
    }
    write_atomic(&out.join(NORMS_FILE), norms.as_bytes())?;

    let manifest = RunManifest {
        subcommand: "solve",
        config_path: config_path.display().to_string(),
        config_sha256: format!("{:x}", Sha256::digest(&src)),
        config: &cfg,
        solver: &solver,
        seed: cfg.seed(),
        output_dir: out.display().to_string(),
        outputs,
        version: env!("CARGO_PKG_VERSION"),
    };
    write_atomic(&out.join(MANIFEST_FILE), &to_json(&manifest)?)?;

    let l2_0 = traj.initial().l2_norm();
    let ratio = if l2_0 > 0.0 { fmt_f64(last.1 / l2_0) } else { "-".into() };
    println!(
        "t={} l2={} l2_ratio={} besov_{}_{}={}",
        fmt_f64(last.0),
        fmt_f64(last.1),
        ratio,
        solver.norm_p,
        solver.norm_q,
        fmt_f64(last.2)
    );
    Ok(0)
}
