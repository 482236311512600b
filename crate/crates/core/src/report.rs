//! CSV tables with fixed headers, one row per time sample.

use std::io::Write;

use crate::diagnostics::{DecayRateReport, RadiusRow};
use crate::error::{NsgError, Result};

pub const RADIUS_HEADER: [&str; 6] = ["t", "rad_op", "rad_fit", "fit_r2", "rad_over_sqrt_t", "rad_over_sqrt_tlog"];
pub const DECAY_HEADER: [&str; 5] = ["t", "raw_sup", "compensated", "alpha", "n"];
pub const GEVREY_HEADER: [&str; 3] = ["t", "n", "value"];
pub const KAHANE_HEADER: [&str; 2] = ["n", "ratio"];

/// Shortest round-trip formatting; `inf` for infinities, empty for missing.
pub fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> NsgError {
    NsgError::Format(e.to_string())
}

pub fn write_radius_csv<W: Write>(w: W, rows: &[RadiusRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RADIUS_HEADER).map_err(csv_err)?;
    for r in rows {
        out.write_record([
            fmt_f64(r.t),
            fmt_f64(r.rad_op),
            fmt_f64(r.rad_fit),
            fmt_opt(r.fit_r2),
            fmt_opt(r.rad_over_sqrt_t),
            fmt_opt(r.rad_over_sqrt_tlog),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_decay_csv<W: Write>(w: W, report: &DecayRateReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(DECAY_HEADER).map_err(csv_err)?;
    let alpha = report.alpha_label();
    let n = report.n.to_string();
    for ((t, raw), (_, comp)) in report.samples.iter().zip(&report.compensated) {
        out.write_record([fmt_f64(*t), fmt_f64(*raw), fmt_f64(*comp), alpha.clone(), n.clone()]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// `(t, value)` rows of a per-sample Gevrey norm of order `n`.
pub fn write_gevrey_csv<W: Write>(w: W, n: usize, rows: &[(f64, f64)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(GEVREY_HEADER).map_err(csv_err)?;
    for (t, v) in rows {
        out.write_record([fmt_f64(*t), n.to_string(), fmt_f64(*v)]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_kahane_csv<W: Write>(w: W, rows: &[(u64, f64)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(KAHANE_HEADER).map_err(csv_err)?;
    for (n, r) in rows {
        out.write_record([n.to_string(), fmt_f64(*r)]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Parse a CSV table into its header and rows of raw strings.
pub fn read_csv(src: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut rd = csv::Reader::from_reader(src.as_bytes());
    let header = rd.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let rows = rd
        .records()
        .map(|r| r.map(|rec| rec.iter().map(String::from).collect()).map_err(csv_err))
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

/// Parse a cell written by [`fmt_f64`]; empty cells are `None`.
pub fn parse_cell(s: &str) -> Result<Option<f64>> {
    match s {
        "" => Ok(None),
        "inf" => Ok(Some(f64::INFINITY)),
        "-inf" => Ok(Some(f64::NEG_INFINITY)),
        other => other.parse().map(Some).map_err(|_| NsgError::Format(format!("bad numeric cell `{other}`"))),
    }
}

/// Write a file via a sibling temporary and a rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &std::path::Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(std::path::Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| NsgError::invalid("output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    Ok(())
}
