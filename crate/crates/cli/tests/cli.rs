use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn nsg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsg")).args(args).output().expect("spawn nsg")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn solve(dir: &Path, config: &Path, out: &str) -> PathBuf {
    let out = dir.join(out);
    let o = nsg(&["solve", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "solve failed: {}", stderr(&o));
    out
}

/// Data rows of a CSV as string cells.
fn rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(str::to_string).collect();
    let data = rdr.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect();
    (header, data)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

const TAYLOR_GREEN: &str = "[grid]\ndim = 2\nn = 32\n\n[solver]\nT = 1.0\nsteps = 200\nrecord_every = 20\n\n[initial_data]\nkind = \"taylor_green\"\n";

#[test]
fn taylor_green_decays_by_exp_minus_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tg.toml", TAYLOR_GREEN);
    let out = dir.path().join("run");
    let o = nsg(&["solve", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o);
    let ratio = line.split_whitespace().find_map(|kv| kv.strip_prefix("l2_ratio=")).map(num).expect("printed ratio");
    assert!((ratio - (-2.0f64).exp()).abs() < 1e-6, "ratio {ratio}");

    let (header, data) = rows(&out.join("norms.csv"));
    assert_eq!(header, ["t", "l2", "besov"]);
    assert_eq!(data.len(), 11);
    let (l0, l1) = (num(&data[0][1]), num(&data[10][1]));
    assert!((l1 / l0 - (-2.0f64).exp()).abs() < 1e-6);

    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "solve");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["solver"]["steps"], 200);
    assert!(manifest["seed"].is_null());
}

#[test]
fn zero_data_gives_zero_norms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "zero.toml",
        "[grid]\ndim = 3\nn = 8\n[solver]\nT = 0.5\nsteps = 10\n[initial_data]\nkind = \"zero\"\n",
    );
    let out = solve(dir.path(), &cfg, "run");
    let (_, data) = rows(&out.join("norms.csv"));
    assert_eq!(data.len(), 11);
    for r in data {
        assert_eq!(num(&r[1]), 0.0);
        assert_eq!(num(&r[2]), 0.0);
    }
}

#[test]
fn unknown_config_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        "[grid]\ndim = 2\nn = 16\n[solver]\nT = 1.0\nsteps = 10\ntimestep = 0.1\n[initial_data]\nkind = \"zero\"\n",
    );
    let o = nsg(&["solve", cfg.to_str().unwrap(), "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("timestep") && err.contains("line 7"), "{err}");
}

#[test]
fn missing_trajectory_fails() {
    let o = nsg(&["probe", "radius", "/nonexistent/trajectory.nsg"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("nonexistent"));
}

#[test]
fn fn_zero_matches_gevrey_and_decay_reduces_to_sup_norm() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "rand.toml",
        "[grid]\ndim = 2\nn = 16\n[solver]\nT = 0.5\nsteps = 50\nrecord_every = 10\n\
         [initial_data]\nkind = \"random\"\nseed = 3\nsigma = 1.5\ntarget_norm = 0.05\ndealias = true\n",
    );
    let out = solve(dir.path(), &cfg, "run");
    let traj = out.join("trajectory.nsg");
    let traj = traj.to_str().unwrap();
    let g = nsg(&["probe", "gevrey", traj, "--p", "3", "--q", "inf"]);
    let f = nsg(&["probe", "fn", traj, "--n", "0", "--p", "3", "--q", "inf"]);
    assert!(g.status.success() && f.status.success());
    assert_eq!(stdout(&g), stdout(&f));
    assert_eq!(stdout(&g).lines().count(), 7);

    let path = dir.path().join("decay.csv");
    let d = nsg(&["probe", "decay", traj, "--alpha", "0,0", "--n", "0", "--out", path.to_str().unwrap()]);
    assert!(d.status.success(), "{}", stderr(&d));
    let (header, data) = rows(&path);
    assert_eq!(header, ["t", "raw_sup", "compensated", "alpha", "n"]);
    for r in &data {
        assert_eq!(r[1], r[2]);
        assert_eq!(r[3], "0,0");
    }

    // Higher orders need the derivative stack, which the probe rebuilds.
    let f2 = nsg(&["probe", "fn", traj, "--n", "2"]);
    assert!(f2.status.success(), "{}", stderr(&f2));
}

#[test]
fn radius_probe_on_rough_heat_run_fills_log_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "rough.toml",
        "[grid]\ndim = 2\nn = 64\n[solver]\nT = 0.1\nsteps = 200\nrecord_every = 20\n\
         [initial_data]\nkind = \"power_law\"\nsigma = 3.0\ntarget_norm = 1e-6\n",
    );
    let out = solve(dir.path(), &cfg, "run");
    let csv_path = dir.path().join("radius.csv");
    let o = nsg(&[
        "probe",
        "radius",
        out.join("trajectory.nsg").to_str().unwrap(),
        "--kappa",
        "2.5",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, data) = rows(&csv_path);
    assert_eq!(header, ["t", "rad_op", "rad_fit", "fit_r2", "rad_over_sqrt_t", "rad_over_sqrt_tlog"]);
    assert_eq!(data.len(), 10);
    for r in &data {
        let t = num(&r[0]);
        assert!(t > 0.0 && t < 1.0);
        assert!(num(&r[5]) > 0.0);
        assert!((num(&r[4]) - num(&r[1]) / t.sqrt()).abs() < 1e-9 * num(&r[4]));
    }
}

#[test]
fn verify_kahane_and_lp() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = nsg(&["verify", "kahane", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("[PASS] kahane_sum"));
    let (_, data) = rows(&dir.path().join("kahane.csv"));
    assert_eq!(data.len(), 200);
    for r in data {
        let n = num(&r[0]);
        assert!((num(&r[1]) - (4.0 * n - 2.0) / n).abs() < 1e-15);
    }

    let o = nsg(&["verify", "lp", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let rep: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("lp.json")).unwrap()).unwrap();
    assert_eq!(rep[0]["status"], "pass");
    assert!(rep[0]["measured_constant"].as_f64().unwrap() < 1e-10);
}

#[test]
fn picard_on_large_data_exits_with_blowup_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "big.toml",
        "[grid]\ndim = 2\nn = 16\n[solver]\nT = 1.0\nsteps = 40\nmethod = \"picard\"\npicard_max_iters = 6\n\
         [initial_data]\nkind = \"random\"\nseed = 1\nsigma = 2.0\ntarget_norm = 10.0\n\
         [diagnostics]\np = 8\nq = \"inf\"\n",
    );
    let o = nsg(&["solve", cfg.to_str().unwrap(), "--out", dir.path().join("run").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("fixed-point iteration failed"));
}

#[test]
fn repeated_runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "rand.toml",
        "[grid]\ndim = 2\nn = 16\n[solver]\nT = 0.2\nsteps = 20\n[initial_data]\nkind = \"random\"\nseed = 9\n",
    );
    let read = |d: &Path| ["trajectory.nsg", "norms.csv", "manifest.json"].map(|f| std::fs::read(d.join(f)).unwrap());
    let out = solve(dir.path(), &cfg, "run");
    let first = read(&out);
    let o = Command::new(env!("CARGO_BIN_EXE_nsg"))
        .env("NSG_THREADS", "1")
        .args(["solve", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(first, read(&out));
}
