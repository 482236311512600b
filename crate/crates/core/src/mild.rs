//! Mild solutions `u = e^{tΔ}u₀ - ℬ(u,u)` by exponential time stepping and by
//! Picard iteration, plus time derivatives `∂ₜⁿu` from the PDE.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{NsgError, Result};
use crate::field::{SpectralField, VelocityField};
use crate::grid::{norm_sq, Grid};
use crate::lp::{build_filter_bank, epq_from_blocks, BlockSeries, Exponent, LPFilterBank, NormSpec};
use crate::spectral::{bilinear_term, check_fraction, heat_velocity, leray_project};

/// Deepest supported time-derivative stack.
pub const MAX_DERIVATIVE_ORDER: usize = 4;

#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    pub grid: Grid,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub steps: usize,
    pub substeps_quadrature: usize,
    pub dealias_fraction: f64,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    /// Empirical proxy for the smallness constant of the global theory.
    pub smallness_threshold: f64,
    pub record_every: usize,
    /// Lebesgue index of the `E_{p,q}` norm used for Picard residuals.
    pub norm_p: f64,
    pub norm_q: Exponent,
}

impl SolverConfig {
    pub fn new(grid: Grid, t_final: f64, steps: usize) -> Self {
        SolverConfig {
            grid,
            t_final,
            steps,
            substeps_quadrature: 1,
            dealias_fraction: crate::spectral::TWO_THIRDS,
            picard_tol: 1e-10,
            picard_max_iters: 50,
            smallness_threshold: 0.1,
            record_every: 1,
            norm_p: 2.0,
            norm_q: Exponent::Finite(2.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(NsgError::invalid("T must be positive"));
        }
        if self.steps == 0 || self.substeps_quadrature == 0 || self.record_every == 0 || self.picard_max_iters == 0 {
            return Err(NsgError::invalid("steps, substeps, record_every and picard_max_iters must be >= 1"));
        }
        if !(self.picard_tol >= 1e-14) {
            return Err(NsgError::invalid("picard_tol must be >= 1e-14"));
        }
        if !(self.smallness_threshold > 0.0) {
            return Err(NsgError::invalid("smallness threshold must be positive"));
        }
        NormSpec::besov(0.0, self.norm_p, self.norm_q)?;
        check_fraction(self.dealias_fraction)
    }

    pub fn step_size(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    /// Step indices that are recorded: multiples of `record_every`, plus the last step.
    pub fn recorded_steps(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..=self.steps).step_by(self.record_every).collect();
        if *idx.last().unwrap() != self.steps {
            idx.push(self.steps);
        }
        idx
    }
}

/// Time-indexed velocity fields with the heat part and optional derivative stacks.
#[derive(Debug, Clone)]
pub struct SolutionTrajectory {
    pub config: SolverConfig,
    pub times: Vec<f64>,
    pub velocity: Vec<VelocityField>,
    pub heat: Vec<VelocityField>,
    /// `derivatives[i][n] = ∂ₜⁿu(t_i)`, when computed.
    pub derivatives: Option<Vec<Vec<SpectralField>>>,
}

impl SolutionTrajectory {
    pub fn new(config: SolverConfig, times: Vec<f64>, velocity: Vec<VelocityField>) -> Result<Self> {
        if times.is_empty() || times.len() != velocity.len() {
            return Err(NsgError::invalid("trajectory needs matching, nonempty times and fields"));
        }
        if times[0] != 0.0 {
            return Err(NsgError::invalid("trajectory must start at t = 0"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(NsgError::invalid("trajectory times must increase"));
        }
        let heat = heat_part(&velocity[0], &times)?;
        Ok(SolutionTrajectory { config, times, velocity, heat, derivatives: None })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial(&self) -> &VelocityField {
        &self.velocity[0]
    }

    /// `ũ(t_i) = u(t_i) - u_h(t_i)`
    pub fn fluctuation(&self, i: usize) -> SpectralField {
        self.velocity[i].sub(&self.heat[i])
    }

    pub fn series(&self) -> Vec<(f64, SpectralField)> {
        self.times.iter().zip(&self.velocity).map(|(t, u)| (*t, u.as_field().clone())).collect()
    }

    pub fn fluctuation_series(&self) -> Vec<(f64, SpectralField)> {
        (0..self.len()).map(|i| (self.times[i], self.fluctuation(i))).collect()
    }

    /// Attach derivative stacks up to order `n_max`.
    pub fn with_derivatives(mut self, n_max: usize) -> Result<Self> {
        self.derivatives = Some(time_derivative_stack(&self, n_max)?);
        Ok(self)
    }

    pub fn derivative_depth(&self) -> Option<usize> {
        self.derivatives.as_ref().and_then(|d| d.first()).map(|s| s.len() - 1)
    }

    /// Samples with `t` in `[lo, hi]`.
    pub fn indices_in(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.times[i] >= lo - 1e-12 && self.times[i] <= hi + 1e-12).collect()
    }
}

/// `u_h(t) = e^{tΔ}u₀` at each requested time.
pub fn heat_part(u0: &VelocityField, times: &[f64]) -> Result<Vec<VelocityField>> {
    times.iter().map(|&t| heat_velocity(u0, t)).collect()
}

/// `φ₁(z) = (e^z - 1)/z` and `φ₂(z) = (e^z - 1 - z)/z²`.
pub fn phi_functions(z: f64) -> (f64, f64) {
    if z.abs() < 0.5 {
        // Taylor series: φ₁ = Σ z^m/(m+1)!, φ₂ = Σ z^m/(m+2)!
        let mut term = 1.0;
        let mut phi1 = 0.0;
        let mut phi2 = 0.0;
        let mut fact1 = 1.0; // (m+1)!
        let mut fact2 = 2.0; // (m+2)!
        for m in 0..24 {
            phi1 += term / fact1;
            phi2 += term / fact2;
            term *= z;
            fact1 *= (m + 2) as f64;
            fact2 *= (m + 3) as f64;
        }
        (phi1, phi2)
    } else {
        let em1 = z.exp_m1();
        (em1 / z, (em1 - z) / (z * z))
    }
}

/// Per-mode tables `e^{-δ|k|²}`, `δφ₁`, `δφ₂` for a step `δ`.
struct ExpWeights {
    decay: Vec<f64>,
    w1: Vec<f64>,
    w2: Vec<f64>,
}

impl ExpWeights {
    fn new(grid: &Grid, delta: f64) -> Self {
        let n = grid.len();
        let mut decay = Vec::with_capacity(n);
        let mut w1 = Vec::with_capacity(n);
        let mut w2 = Vec::with_capacity(n);
        for k in grid.wavevectors() {
            let z = -delta * norm_sq(&k);
            let (p1, p2) = phi_functions(z);
            decay.push(z.exp());
            w1.push(delta * p1);
            w2.push(delta * p2);
        }
        ExpWeights { decay, w1, w2 }
    }

    /// `e^{δL}b + δφ₁ n0 + δφ₂ (n1 - n0)`, component-wise.
    fn advance(&self, b: &SpectralField, n0: &SpectralField, n1: &SpectralField) -> SpectralField {
        let len = self.decay.len();
        let mut out = b.clone();
        let (src0, src1) = (n0.coeffs(), n1.coeffs());
        for (idx, v) in out.coeffs_mut().iter_mut().enumerate() {
            let m = idx % len;
            *v = *v * self.decay[m] + src0[idx] * self.w1[m] + (src1[idx] - src0[idx]) * self.w2[m];
        }
        out
    }
}

fn lerp(a: &SpectralField, b: &SpectralField, s: f64) -> SpectralField {
    a.scale(1.0 - s).axpy(s, b)
}

/// `ℬ(u,v)(t_i) = ∫₀^{t_i} e^{(t_i-s)Δ} ℙ∇·(u⊗v)(s) ds` at every sample time.
///
/// Each recorded interval is split into `substeps` pieces; `u`, `v` are
/// interpolated linearly onto the nodes, the nonlinearity is interpolated
/// linearly between nodes, and the heat factor is integrated exactly per mode.
pub fn duhamel_series(
    times: &[f64],
    u: &[SpectralField],
    v: &[SpectralField],
    substeps: usize,
    fraction: f64,
) -> Result<Vec<SpectralField>> {
    if times.is_empty() || u.len() != times.len() || v.len() != times.len() {
        return Err(NsgError::invalid("Duhamel series needs one field per time"));
    }
    if substeps == 0 {
        return Err(NsgError::invalid("substeps must be >= 1"));
    }
    let grid = *u[0].grid();
    let mut acc = SpectralField::zeros(grid, u[0].components());
    let mut out = vec![acc.clone()];
    let mut n_prev = bilinear_term(&u[0], &v[0], fraction)?;
    let mut cache: Option<(f64, ExpWeights)> = None;
    for i in 0..times.len() - 1 {
        let h = times[i + 1] - times[i];
        let delta = h / substeps as f64;
        let reuse = matches!(&cache, Some((d, _)) if (d - delta).abs() <= 1e-15 * delta);
        if !reuse {
            cache = Some((delta, ExpWeights::new(&grid, delta)));
        }
        let weights = &cache.as_ref().unwrap().1;
        for l in 1..=substeps {
            let s = l as f64 / substeps as f64;
            let n_next = if l == substeps {
                bilinear_term(&u[i + 1], &v[i + 1], fraction)?
            } else {
                bilinear_term(&lerp(&u[i], &u[i + 1], s), &lerp(&v[i], &v[i + 1], s), fraction)?
            };
            acc = weights.advance(&acc, &n_prev, &n_next);
            n_prev = n_next;
        }
        out.push(acc.clone());
    }
    Ok(out)
}

/// `ℬ(u,v)(t)` for trajectories sharing a time grid that covers `[0, t]`.
pub fn bilinear_duhamel(u: &SolutionTrajectory, v: &SolutionTrajectory, t: f64) -> Result<VelocityField> {
    if u.times != v.times || u.config.grid != v.config.grid {
        return Err(NsgError::invalid("trajectories do not share a time grid"));
    }
    let last = *u.times.last().unwrap();
    if !(t >= 0.0) || t > last * (1.0 + 1e-12) {
        return Err(NsgError::invalid(format!("t = {t} not covered by trajectory [0, {last}]")));
    }
    let cfg = &u.config;
    let i = u.times.iter().rposition(|&s| s <= t + 1e-14).unwrap();
    let uf: Vec<SpectralField> = u.velocity[..=i].iter().map(|f| f.as_field().clone()).collect();
    let vf: Vec<SpectralField> = v.velocity[..=i].iter().map(|f| f.as_field().clone()).collect();
    let series = duhamel_series(&u.times[..=i], &uf, &vf, cfg.substeps_quadrature, cfg.dealias_fraction)?;
    let mut acc = series.last().unwrap().clone();
    let rest = t - u.times[i];
    if rest > 1e-14 * last.max(1.0) {
        let s = rest / (u.times[i + 1] - u.times[i]);
        let u_t = lerp(&u.velocity[i], &u.velocity[i + 1], s);
        let v_t = lerp(&v.velocity[i], &v.velocity[i + 1], s);
        let n0 = bilinear_term(&u.velocity[i], &v.velocity[i], cfg.dealias_fraction)?;
        let n1 = bilinear_term(&u_t, &v_t, cfg.dealias_fraction)?;
        acc = ExpWeights::new(&cfg.grid, rest).advance(&acc, &n0, &n1);
    }
    Ok(VelocityField::new_unchecked(acc))
}

/// Exponential Runge-Kutta (ETD2) integration of `∂ₜu = Δu - ℙ∇·(u⊗u)`.
///
/// Predictor `a = e^{hΔ}u - hφ₁N(u)`, corrector
/// `u⁺ = a - hφ₂(N(a) - N(u))`, i.e. the nonlinearity is linearly
/// interpolated between the endpoints and integrated against the exact heat
/// factor.
pub fn step_solve(u0: &VelocityField, config: &SolverConfig) -> Result<SolutionTrajectory> {
    config.validate()?;
    if *u0.grid() != config.grid {
        return Err(NsgError::invalid("initial data grid differs from config grid"));
    }
    let h = config.step_size();
    let weights = ExpWeights::new(&config.grid, h);
    let fraction = config.dealias_fraction;
    let zero = SpectralField::zeros(config.grid, config.grid.dim());

    let mut u = u0.as_field().clone();
    let mut times = vec![0.0];
    let mut fields = vec![u0.clone()];
    for step in 1..=config.steps {
        let t_prev = (step - 1) as f64 * h;
        let blowup = |detail: &str| NsgError::Blowup { last_good_time: t_prev, detail: detail.to_string() };
        let n0 = bilinear_term(&u, &u, fraction).map_err(|_| blowup("non-finite nonlinearity"))?;
        let a = weights.advance(&u, &zero, &zero).axpy(-1.0, &weights_apply_w1(&weights, &n0));
        let n1 = bilinear_term(&a, &a, fraction).map_err(|_| blowup("non-finite predictor"))?;
        let corr = weights_apply_w2(&weights, &n1.sub(&n0));
        let next = a.sub(&corr);
        let next = leray_project(&next)?.into_field();
        if !next.is_finite() {
            return Err(blowup("non-finite velocity"));
        }
        u = next;
        if step % config.record_every == 0 || step == config.steps {
            times.push(step as f64 * h);
            fields.push(VelocityField::new_unchecked(u.clone()));
        }
    }
    SolutionTrajectory::new(config.clone(), times, fields)
}

fn weights_apply_w1(w: &ExpWeights, f: &SpectralField) -> SpectralField {
    f.apply_table(&w.w1)
}

fn weights_apply_w2(w: &ExpWeights, f: &SpectralField) -> SpectralField {
    f.apply_table(&w.w2)
}

/// Residual history of a Picard run.
#[derive(Debug, Clone, Serialize)]
pub struct PicardReport {
    pub iterations: usize,
    /// `‖ũ^{m+1} - ũ^m‖_{E_{p,q}}` per iteration.
    pub residuals: Vec<f64>,
    /// `residuals[m] / residuals[m-1]`.
    pub contraction_ratios: Vec<f64>,
    pub converged: bool,
    pub initial_besov_norm: f64,
    pub above_smallness_threshold: bool,
    pub stop_reason: String,
}

/// Picard iteration `ũ^{m+1} = -ℬ(u_h + ũ^m, u_h + ũ^m)` on the full step grid;
/// expanding the bilinear form gives the four-term splitting
/// `ℬ(ũ,ũ) + ℬ(ũ,u_h) + ℬ(u_h,ũ) + ℬ(u_h,u_h)`.
pub fn picard_solve(u0: &VelocityField, config: &SolverConfig) -> Result<(SolutionTrajectory, PicardReport)> {
    config.validate()?;
    if *u0.grid() != config.grid {
        return Err(NsgError::invalid("initial data grid differs from config grid"));
    }
    let bank = build_filter_bank(&config.grid);
    let initial_besov_norm = crate::lp::besov_norm(u0, &NormSpec::critical(config.norm_p, config.norm_q)?, &bank)?;
    let h = config.step_size();
    let times: Vec<f64> = (0..=config.steps).map(|i| i as f64 * h).collect();
    let heat: Vec<SpectralField> = heat_part(u0, &times)?.into_iter().map(VelocityField::into_field).collect();
    let zero = SpectralField::zeros(config.grid, config.grid.dim());

    let mut fluct = vec![zero.clone(); times.len()];
    let mut report = PicardReport {
        iterations: 0,
        residuals: Vec::new(),
        contraction_ratios: Vec::new(),
        converged: false,
        initial_besov_norm,
        above_smallness_threshold: initial_besov_norm > config.smallness_threshold,
        stop_reason: String::new(),
    };
    let mut growing = 0;
    for _ in 0..config.picard_max_iters {
        let full: Vec<SpectralField> = heat.iter().zip(&fluct).map(|(a, b)| a.add(b)).collect();
        let b = match duhamel_series(&times, &full, &full, config.substeps_quadrature, config.dealias_fraction) {
            Ok(b) => b,
            Err(_) => {
                report.stop_reason = "non-finite iterate".into();
                return Err(NsgError::FixedPointFailure { report: Box::new(report) });
            }
        };
        let next: Vec<SpectralField> = b.iter().map(|f| f.scale(-1.0)).collect();
        let diff: Vec<(f64, SpectralField)> =
            times.iter().zip(next.iter().zip(&fluct)).map(|(t, (a, b))| (*t, a.sub(b))).collect();
        let residual = epq_distance_series(&diff, config.norm_p, config.norm_q, &bank)?;
        report.iterations += 1;
        if !residual.is_finite() || next.iter().any(|f| !f.is_finite()) {
            report.stop_reason = "non-finite residual".into();
            return Err(NsgError::FixedPointFailure { report: Box::new(report) });
        }
        if let Some(&prev) = report.residuals.last() {
            let ratio = if prev > 0.0 { residual / prev } else { 0.0 };
            report.contraction_ratios.push(ratio);
            growing = if ratio >= 1.0 { growing + 1 } else { 0 };
        }
        report.residuals.push(residual);
        fluct = next;
        if residual < config.picard_tol {
            report.converged = true;
            report.stop_reason = "tolerance reached".into();
            break;
        }
        if growing >= 3 || residual > 1e8 * report.residuals[0].max(1e-300) {
            report.stop_reason = "iteration is not contracting".into();
            return Err(NsgError::FixedPointFailure { report: Box::new(report) });
        }
    }
    if !report.converged {
        report.stop_reason = "iteration limit reached".into();
        return Err(NsgError::FixedPointFailure { report: Box::new(report) });
    }
    let recorded = config.recorded_steps();
    let velocity = recorded.iter().map(|&i| leray_project(&heat[i].add(&fluct[i]))).collect::<Result<Vec<_>>>()?;
    let rec_times = recorded.iter().map(|&i| times[i]).collect();
    Ok((SolutionTrajectory::new(config.clone(), rec_times, velocity)?, report))
}

fn epq_distance_series(diff: &[(f64, SpectralField)], p: f64, q: Exponent, bank: &LPFilterBank) -> Result<f64> {
    Ok(epq_from_blocks(&BlockSeries::new(diff, p, bank)?, q)?.value)
}

/// `‖a - b‖_{E_{p,q}}` for trajectories on the same time grid.
pub fn epq_distance(
    a: &SolutionTrajectory,
    b: &SolutionTrajectory,
    p: f64,
    q: Exponent,
    bank: &LPFilterBank,
) -> Result<f64> {
    if a.times.len() != b.times.len() || a.times.iter().zip(&b.times).any(|(x, y)| (x - y).abs() > 1e-12) {
        return Err(NsgError::invalid("trajectories are sampled at different times"));
    }
    let diff: Vec<(f64, SpectralField)> =
        (0..a.len()).map(|i| (a.times[i], a.velocity[i].sub(&b.velocity[i]))).collect();
    epq_distance_series(&diff, p, q, bank)
}

/// `‖u(t) - e^{tΔ}u₀ + ℬ(u,u)(t)‖₂` at every recorded time.
pub fn mild_residual(traj: &SolutionTrajectory) -> Result<Vec<(f64, f64)>> {
    let fields: Vec<SpectralField> = traj.velocity.iter().map(|u| u.as_field().clone()).collect();
    let cfg = &traj.config;
    let b = duhamel_series(&traj.times, &fields, &fields, cfg.substeps_quadrature, cfg.dealias_fraction)?;
    Ok((0..traj.len()).map(|i| (traj.times[i], traj.velocity[i].sub(&traj.heat[i]).add(&b[i]).l2_norm())).collect())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `∂ₜⁿu` for `n <= n_max` at every recorded time, from
/// `∂ₜⁿu = Δ∂ₜⁿ⁻¹u - Σ_j C(n-1, j) ℙ∇·(∂ₜʲu ⊗ ∂ₜⁿ⁻¹⁻ʲu)`.
pub fn time_derivative_stack(traj: &SolutionTrajectory, n_max: usize) -> Result<Vec<Vec<SpectralField>>> {
    use rayon::prelude::*;
    if n_max > MAX_DERIVATIVE_ORDER {
        return Err(NsgError::invalid(format!("derivative order {n_max} exceeds {MAX_DERIVATIVE_ORDER}")));
    }
    let fraction = traj.config.dealias_fraction;
    traj.velocity.par_iter().map(|u| derivative_stack_at(u.as_field(), n_max, fraction)).collect()
}

pub fn derivative_stack_at(u: &SpectralField, n_max: usize, fraction: f64) -> Result<Vec<SpectralField>> {
    let mut stack = vec![u.clone()];
    for n in 1..=n_max {
        let mut next = crate::spectral::laplacian(&stack[n - 1]);
        for j in 0..n {
            let b = bilinear_term(&stack[j], &stack[n - 1 - j], fraction)?;
            next.add_assign_scaled(-binomial(n - 1, j), &b);
        }
        stack.push(next);
    }
    Ok(stack)
}

/// `∂ₜⁿ(tⁿu) = Σ_i C(n,i) n!/(n-i)! t^{n-i} ∂ₜ^{n-i}u`, from a derivative stack.
pub fn weighted_time_derivative(stack: &[SpectralField], t: f64, n: usize) -> Result<SpectralField> {
    if stack.len() <= n {
        return Err(NsgError::invalid(format!("derivative stack of depth {} cannot give order {n}", stack.len() - 1)));
    }
    let mut acc = SpectralField::zeros(*stack[0].grid(), stack[0].components());
    let mut falling = 1.0; // n!/(n-i)!
    for i in 0..=n {
        if i > 0 {
            falling *= (n - i + 1) as f64;
        }
        let coef = binomial(n, i) * falling * t.powi((n - i) as i32);
        if coef != 0.0 {
            acc.add_assign_scaled(coef, &stack[n - i]);
        }
    }
    Ok(acc)
}

/// Convenience for tests and examples: the velocity with a single real mode pair.
pub fn single_mode_velocity(grid: Grid, k: [i64; 3], amplitude: [f64; 3]) -> Result<VelocityField> {
    let mut f = SpectralField::zeros(grid, grid.dim());
    for c in 0..grid.dim() {
        f.set_real_mode(c, &k, Complex64::new(amplitude[c], 0.0));
    }
    VelocityField::new(f)
}
