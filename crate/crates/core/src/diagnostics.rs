//! Measurements on trajectories: Gevrey norms `‖e^{√tΛ}u‖`, the `Fₙ` family,
//! derivative decay rates and operational analyticity radii.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{NsgError, Result};
use crate::field::{MultiIndex, SpectralField};
use crate::grid::{norm_l1, norm_sq};
use crate::lp::{besov_norm, epq_from_blocks, BlockSeries, Exponent, LPFilterBank, NormSpec};
use crate::mild::{weighted_time_derivative, SolutionTrajectory};
use crate::spectral::{derivative, gevrey_multiplier, overflow_safe_exponent};

/// Default Gevrey-doubling factor for the operational radius.
pub const DEFAULT_KAPPA: f64 = 2.0;
/// Normalized coefficients below this are treated as round-off.
pub const NOISE_FLOOR: f64 = 1e-13;
/// Bisection tolerance for the operational radius.
pub const RADIUS_TOL: f64 = 1e-4;

/// `E_{p,q}` norm of `e^{√tΛ}` applied to a series, skipping samples whose
/// weight overflows.
#[derive(Debug, Clone, Serialize)]
pub struct GevreyNorm {
    pub value: f64,
    pub sup_part: f64,
    pub integral_part: f64,
    /// Times at which `e^{√tΛ}` overflowed (radius exceeded there).
    pub exceeded: Vec<f64>,
}

fn gevrey_weighted(series: Vec<(f64, SpectralField)>) -> (Vec<(f64, SpectralField)>, Vec<f64>) {
    let weighted: Vec<(f64, Result<SpectralField>)> =
        series.into_par_iter().map(|(t, f)| (t, gevrey_multiplier(&f, t.sqrt()))).collect();
    let mut kept = Vec::new();
    let mut exceeded = Vec::new();
    for (t, r) in weighted {
        match r {
            Ok(f) => kept.push((t, f)),
            Err(_) => exceeded.push(t),
        }
    }
    (kept, exceeded)
}

fn gevrey_epq_series(
    series: Vec<(f64, SpectralField)>,
    p: f64,
    q: Exponent,
    bank: &LPFilterBank,
) -> Result<GevreyNorm> {
    let (kept, exceeded) = gevrey_weighted(series);
    if kept.is_empty() {
        return Err(NsgError::DiagnosticImpossible("e^{√tΛ} overflows at every sample".into()));
    }
    let norm = epq_from_blocks(&BlockSeries::new(&kept, p, bank)?, q)?;
    Ok(GevreyNorm {
        value: norm.value,
        sup_part: norm.sup_part.value,
        integral_part: norm.integral_part.value,
        exceeded,
    })
}

/// `‖e^{√tΛ}u‖_{E_{p,q}}` over the recorded samples.
pub fn gevrey_epq(traj: &SolutionTrajectory, p: f64, q: Exponent, bank: &LPFilterBank) -> Result<GevreyNorm> {
    gevrey_epq_series(traj.series(), p, q, bank)
}

pub fn gevrey_epq_norm(traj: &SolutionTrajectory, p: f64, q: Exponent, bank: &LPFilterBank) -> Result<f64> {
    Ok(gevrey_epq(traj, p, q, bank)?.value)
}

/// `(t, ‖e^{√tΛ}u(t)‖_{Ḃ^{3/p-1}_{p,q}})` per sample; overflowing samples are dropped.
pub fn gevrey_besov_series(
    traj: &SolutionTrajectory,
    p: f64,
    q: Exponent,
    bank: &LPFilterBank,
) -> Result<Vec<(f64, f64)>> {
    let spec = NormSpec::critical(p, q)?;
    let (kept, _) = gevrey_weighted(traj.series());
    kept.par_iter().map(|(t, f)| Ok((*t, besov_norm(f, &spec, bank)?))).collect()
}

/// `tⁿ`-weighted derivative `∂ₜⁿ(tⁿu)` at every sample.
pub fn weighted_derivative_series(traj: &SolutionTrajectory, n: usize) -> Result<Vec<(f64, SpectralField)>> {
    let stacks = traj.derivatives.as_ref().ok_or_else(|| NsgError::invalid("trajectory has no derivative stacks"))?;
    (0..traj.len())
        .map(|i| {
            let stack = &stacks[i];
            if stack.len() <= n {
                return Err(NsgError::invalid(format!("F_{n} needs stack depth {n}, have {}", stack.len() - 1)));
            }
            let f = if n == 0 { stack[0].clone() } else { weighted_time_derivative(stack, traj.times[i], n)? };
            Ok((traj.times[i], f))
        })
        .collect()
}

/// `(t, ‖Fₙ(u)(t)‖_{Ḃ^{3/p-1}_{p,q}})` per sample; `n = 0` is the Gevrey series.
pub fn f_n_besov_series(
    traj: &SolutionTrajectory,
    n: usize,
    p: f64,
    q: Exponent,
    bank: &LPFilterBank,
) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return gevrey_besov_series(traj, p, q, bank);
    }
    let spec = NormSpec::critical(p, q)?;
    let (kept, _) = gevrey_weighted(weighted_derivative_series(traj, n)?);
    kept.par_iter().map(|(t, f)| Ok((*t, besov_norm(f, &spec, bank)?))).collect()
}

/// `‖Fₙ(u)‖_{E_{p,q}}` with `Fₙ(u) = e^{√tΛ}∂ₜⁿ(tⁿu)`.
pub fn f_n(traj: &SolutionTrajectory, n: usize, p: f64, q: Exponent, bank: &LPFilterBank) -> Result<GevreyNorm> {
    if n == 0 {
        return gevrey_epq(traj, p, q, bank);
    }
    gevrey_epq_series(weighted_derivative_series(traj, n)?, p, q, bank)
}

pub fn f_n_norm(traj: &SolutionTrajectory, n: usize, p: f64, q: Exponent, bank: &LPFilterBank) -> Result<f64> {
    Ok(f_n(traj, n, p, q, bank)?.value)
}

/// Empirical constants of the `Cⁿnⁿ` derivative law.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    /// `‖F₀‖ = ‖e^{√tΛ}u‖_{E_{p,q}}`.
    pub rho_inv: f64,
    /// Base `C` of `‖Fₙ‖ ≈ ρ⁻¹ Cⁿ nⁿ`, least squares in `log` over `n >= 1`.
    pub c_growth: f64,
    /// `(n, ‖Fₙ‖)`.
    pub f_norms: Vec<(usize, f64)>,
    /// `(n, (‖Fₙ‖/(ρ⁻¹nⁿ))^{1/n})` for `n >= 1`.
    pub growth_ratios: Vec<(usize, f64)>,
    pub notes: Vec<String>,
}

pub fn constants_report(
    traj: &SolutionTrajectory,
    n_max: usize,
    p: f64,
    q: Exponent,
    bank: &LPFilterBank,
) -> Result<ConstantsReport> {
    let mut f_norms = Vec::new();
    let mut notes = Vec::new();
    for n in 0..=n_max {
        let g = f_n(traj, n, p, q, bank)?;
        if !g.exceeded.is_empty() {
            notes.push(format!("F_{n}: weight overflowed at {} samples", g.exceeded.len()));
        }
        f_norms.push((n, g.value));
    }
    let rho_inv = f_norms[0].1;
    let mut growth_ratios = Vec::new();
    let (mut num, mut den) = (0.0, 0.0);
    for &(n, v) in &f_norms[1..] {
        let nf = n as f64;
        growth_ratios.push((n, (v / (rho_inv * nf.powf(nf))).powf(1.0 / nf)));
        num += nf * ((v / rho_inv).ln() - nf * nf.ln());
        den += nf * nf;
    }
    let c_growth = if den > 0.0 && rho_inv > 0.0 { (num / den).exp() } else { 0.0 };
    if rho_inv == 0.0 {
        notes.push("zero trajectory".into());
    }
    Ok(ConstantsReport { rho_inv, c_growth, f_norms, growth_ratios, notes })
}

#[derive(Debug, Clone, Copy, Serialize, Default)]
pub struct RadiusFlags {
    pub finite_support: bool,
    pub poor_fit: bool,
    /// Bisection hit the overflow-safe cap.
    pub capped: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RadiusEstimate {
    pub t: f64,
    pub rad_operational: f64,
    pub rad_fit: f64,
    pub fit_r2: Option<f64>,
    pub shell_range: (i64, i64),
    pub flags: RadiusFlags,
}

/// Shells used by the spectral-tail fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum ShellNorm {
    #[default]
    L1,
    Euclidean,
}

/// Max modulus of `û` (Euclidean over components) on each shell `r = 0, 1, ...`.
pub fn shell_maxima(f: &SpectralField, shells: ShellNorm) -> Vec<f64> {
    let grid = *f.grid();
    let n = grid.len();
    let mut out: Vec<f64> = Vec::new();
    for flat in 0..n {
        let k = grid.wavevector(flat);
        let r = match shells {
            ShellNorm::L1 => norm_l1(&k) as usize,
            ShellNorm::Euclidean => norm_sq(&k).sqrt().round() as usize,
        };
        if out.len() <= r {
            out.resize(r + 1, 0.0);
        }
        let m: f64 = (0..f.components()).map(|c| f.coeffs()[c * n + flat].norm_sqr()).sum::<f64>().sqrt();
        out[r] = out[r].max(m);
    }
    out
}

/// Least-squares line `y = a + b x`; returns `(b, r²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let b = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    (b, r2)
}

/// Spectral-tail radius: minus the slope of `log max_{shell}|û|` from the peak
/// shell out to the noise floor. Returns `(rad, r², (r_lo, r_hi), finite_support)`.
pub fn tail_fit(f: &SpectralField, shells: ShellNorm) -> (f64, Option<f64>, (i64, i64), bool) {
    let m = shell_maxima(f, shells);
    let peak_val = m.iter().cloned().fold(0.0, f64::max);
    if peak_val == 0.0 {
        return (0.0, None, (0, 0), true);
    }
    // Skip the mean shell: it says nothing about decay.
    let peak = (1..m.len()).max_by(|&a, &b| m[a].partial_cmp(&m[b]).unwrap()).unwrap_or(0);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (r, &v) in m.iter().enumerate().skip(peak) {
        if v / peak_val < NOISE_FLOOR {
            // Interior empty shells (e.g. sparse spectra) do not end the tail.
            if m[r..].iter().all(|&w| w / peak_val < NOISE_FLOOR) {
                break;
            }
            continue;
        }
        xs.push(r as f64);
        ys.push(v.ln());
    }
    let range = (*xs.first().unwrap_or(&0.0) as i64, *xs.last().unwrap_or(&0.0) as i64);
    match xs.len() {
        0 | 1 => (f64::INFINITY, None, range, true),
        2 => ((ys[0] - ys[1]) / (xs[1] - xs[0]), None, range, true),
        _ => {
            let (b, r2) = linear_fit(&xs, &ys);
            (-b, Some(r2), range, false)
        }
    }
}

/// Operational radius at one sample: the largest `a` with
/// `‖e^{aΛ}u‖_{Ḃ^{3/p-1}_{p,q}} <= κ‖u‖_{Ḃ^{3/p-1}_{p,q}}`, bisected to `1e-4`,
/// together with the spectral-tail fit.
pub fn operational_radius(
    u: &SpectralField,
    t: f64,
    kappa: f64,
    p: f64,
    q: Exponent,
    bank: &LPFilterBank,
) -> Result<RadiusEstimate> {
    operational_radius_with(u, t, kappa, p, q, bank, ShellNorm::L1)
}

pub fn operational_radius_with(
    u: &SpectralField,
    t: f64,
    kappa: f64,
    p: f64,
    q: Exponent,
    bank: &LPFilterBank,
    shells: ShellNorm,
) -> Result<RadiusEstimate> {
    if !(kappa > 1.0) {
        return Err(NsgError::invalid("kappa must exceed 1"));
    }
    if u.is_zero() {
        return Err(NsgError::invalid("operational radius of the zero field"));
    }
    let spec = NormSpec::critical(p, q)?;
    let base = besov_norm(u, &spec, bank)?;
    if base == 0.0 {
        return Err(NsgError::invalid("field has no resolved nonzero modes"));
    }
    let threshold = kappa * base;
    let within = |a: f64| -> Result<bool> {
        match gevrey_multiplier(u, a) {
            Ok(g) => Ok(besov_norm(&g, &spec, bank)? <= threshold),
            Err(NsgError::Overflow { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    };
    let a_max = overflow_safe_exponent(u.grid());
    let mut flags = RadiusFlags::default();
    let rad_operational = if within(a_max)? {
        flags.capped = true;
        a_max
    } else {
        let (mut lo, mut hi) = (0.0, a_max);
        while hi - lo > RADIUS_TOL {
            let mid = 0.5 * (lo + hi);
            if within(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let (rad_fit, fit_r2, shell_range, finite_support) = tail_fit(u, shells);
    flags.finite_support = finite_support;
    flags.poor_fit = finite_support || fit_r2.is_none_or(|r2| r2 < 0.9);
    Ok(RadiusEstimate { t, rad_operational, rad_fit, fit_r2, shell_range, flags })
}

/// One row of the radius-scaling table.
#[derive(Debug, Clone, Serialize)]
pub struct RadiusRow {
    pub t: f64,
    pub rad_op: f64,
    pub rad_fit: f64,
    pub fit_r2: Option<f64>,
    pub rad_over_sqrt_t: Option<f64>,
    /// `rad/√(t ln(1/t))`; absent for `t >= 1` where the log is not positive.
    pub rad_over_sqrt_tlog: Option<f64>,
    pub flags: RadiusFlags,
}

impl RadiusRow {
    pub fn from_estimate(e: &RadiusEstimate) -> Self {
        let t = e.t;
        RadiusRow {
            t,
            rad_op: e.rad_operational,
            rad_fit: e.rad_fit,
            fit_r2: e.fit_r2,
            rad_over_sqrt_t: (t > 0.0).then(|| e.rad_operational / t.sqrt()),
            rad_over_sqrt_tlog: (t > 0.0 && t < 1.0).then(|| e.rad_operational / (t * (1.0 / t).ln()).sqrt()),
            flags: e.flags,
        }
    }
}

/// Radius table over the positive sample times of a trajectory.
pub fn radius_scaling_probe(
    traj: &SolutionTrajectory,
    kappa: f64,
    p: f64,
    q: Exponent,
    bank: &LPFilterBank,
) -> Result<Vec<RadiusRow>> {
    let idx: Vec<usize> = (0..traj.len()).filter(|&i| traj.times[i] > 0.0).collect();
    if idx.is_empty() {
        return Err(NsgError::invalid("trajectory has no positive sample times"));
    }
    idx.par_iter()
        .map(|&i| {
            operational_radius(&traj.velocity[i], traj.times[i], kappa, p, q, bank)
                .map(|e| RadiusRow::from_estimate(&e))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayRateReport {
    pub alpha: MultiIndex,
    pub dim: usize,
    pub n: usize,
    /// `(t, ‖∂_x^α∂ₜⁿu(t)‖_∞)`
    pub samples: Vec<(f64, f64)>,
    /// `(t, t^{|α|/2+n}‖∂_x^α∂ₜⁿu(t)‖_∞)`
    pub compensated: Vec<(f64, f64)>,
    /// Fitted `t`-exponent of the raw sup-norm over the latest decade.
    pub exponent: Option<f64>,
    pub fit_window: Option<(f64, f64)>,
    pub fit_r2: Option<f64>,
    /// The semilog fit beats the log-log fit: decay is exponential, not a power.
    pub exponential_dominated: bool,
}

impl DecayRateReport {
    pub fn alpha_label(&self) -> String {
        self.alpha.0[..self.dim].iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")
    }

    /// `max/min` of the compensated series on `[lo, hi]`.
    pub fn compensated_spread(&self, lo: f64, hi: f64) -> Option<f64> {
        let vals: Vec<f64> =
            self.compensated.iter().filter(|(t, _)| *t >= lo - 1e-12 && *t <= hi + 1e-12).map(|c| c.1).collect();
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        (!vals.is_empty() && min > 0.0).then(|| max / min)
    }

    /// Exponent of the raw sup-norm fitted on `[lo, hi]`.
    pub fn exponent_on(&self, lo: f64, hi: f64) -> Option<f64> {
        let pts: Vec<&(f64, f64)> =
            self.samples.iter().filter(|(t, v)| *t >= lo - 1e-12 && *t <= hi + 1e-12 && *t > 0.0 && *v > 0.0).collect();
        if pts.len() < 2 {
            return None;
        }
        let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
        Some(linear_fit(&xs, &ys).0)
    }
}

/// Sup-norm decay of `∂_x^α∂ₜⁿu` along a trajectory carrying derivative stacks.
pub fn derivative_decay_probe(traj: &SolutionTrajectory, alpha: MultiIndex, n: usize) -> Result<DecayRateReport> {
    if alpha.order() > 4 {
        return Err(NsgError::invalid("|alpha| must be <= 4"));
    }
    let dim = traj.config.grid.dim();
    if alpha.0[dim..].iter().any(|&a| a != 0) {
        return Err(NsgError::invalid("multi-index has entries beyond the grid dimension"));
    }
    let fields: Vec<&SpectralField> = if n == 0 {
        traj.velocity.iter().map(|u| u.as_field()).collect()
    } else {
        let stacks =
            traj.derivatives.as_ref().ok_or_else(|| NsgError::invalid("trajectory has no derivative stacks"))?;
        if stacks[0].len() <= n {
            return Err(NsgError::invalid(format!("order {n} exceeds the derivative stack depth")));
        }
        stacks.iter().map(|s| &s[n]).collect()
    };
    let sups: Vec<f64> =
        fields.par_iter().map(|f| derivative(f, alpha).map(|d| d.sup_norm())).collect::<Result<Vec<_>>>()?;
    let power = alpha.order() as f64 / 2.0 + n as f64;
    let samples: Vec<(f64, f64)> = traj.times.iter().cloned().zip(sups).collect();
    let compensated = samples.iter().map(|&(t, v)| (t, if power == 0.0 { v } else { t.powf(power) * v })).collect();

    let t_last = *traj.times.last().unwrap();
    let lo = t_last / 10.0;
    let window: Vec<&(f64, f64)> =
        samples.iter().filter(|(t, v)| *t >= lo * (1.0 - 1e-12) && *t > 0.0 && *v > 0.0).collect();
    let first_positive = traj.times.iter().cloned().find(|&t| t > 0.0).unwrap_or(t_last);
    let (exponent, fit_window, fit_r2, exponential_dominated) =
        if window.len() >= 3 && first_positive <= lo * (1.0 + 1e-12) {
            let lx: Vec<f64> = window.iter().map(|p| p.0.ln()).collect();
            let tx: Vec<f64> = window.iter().map(|p| p.0).collect();
            let ly: Vec<f64> = window.iter().map(|p| p.1.ln()).collect();
            let (b, r2) = linear_fit(&lx, &ly);
            let (_, r2_semilog) = linear_fit(&tx, &ly);
            (Some(b), Some((lo, t_last)), Some(r2), r2_semilog > r2)
        } else {
            (None, None, None, false)
        };
    Ok(DecayRateReport { alpha, dim, n, samples, compensated, exponent, fit_window, fit_r2, exponential_dominated })
}
