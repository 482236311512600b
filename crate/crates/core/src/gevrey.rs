//! Gevrey operator calculus: half-line projections `K_±`, Poisson-damped shifts
//! `L_{t,±1}`, sector operators `Z_{t,α,β}`, the product operator
//! `P_t(f,g) = e^{tΛ}(e^{-tΛ}f · e^{-tΛ}g)` and the refined time weights.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{NsgError, Result};
use crate::field::SpectralField;
use crate::grid::{norm_sq, Grid, Wavevector};
use crate::lp::{epq_from_blocks, BlockSeries, EpqNorm, Exponent, LPFilterBank};
use crate::spectral::{dealiased_product, gevrey_multiplier};

/// Sign vectors `(α, β)` of one sector, one entry per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SectorSign {
    pub alpha: [i8; 3],
    pub beta: [i8; 3],
    dim: usize,
}

impl SectorSign {
    pub fn new(alpha: &[i8], beta: &[i8]) -> Result<Self> {
        let dim = alpha.len();
        if !(dim == 2 || dim == 3) || beta.len() != dim {
            return Err(NsgError::invalid("sector signs need one entry per axis (2 or 3 axes)"));
        }
        if alpha.iter().chain(beta).any(|&s| s != 1 && s != -1) {
            return Err(NsgError::invalid("sector signs must be +1 or -1"));
        }
        let mut a = [1i8; 3];
        let mut b = [1i8; 3];
        a[..dim].copy_from_slice(alpha);
        b[..dim].copy_from_slice(beta);
        Ok(SectorSign { alpha: a, beta: b, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// All sign vectors in `{-1, 1}^dim`, in a fixed order (+1 first, axis 0 slowest).
pub fn sign_vectors(dim: usize) -> Vec<[i8; 3]> {
    (0..1usize << dim)
        .map(|bits| {
            let mut s = [1i8; 3];
            for (a, v) in s.iter_mut().enumerate().take(dim) {
                if bits >> (dim - 1 - a) & 1 == 1 {
                    *v = -1;
                }
            }
            s
        })
        .collect()
}

/// 1-D half-line symbol with the zero frequency split evenly.
#[inline]
fn half_line(sign: i8, k: i64) -> f64 {
    let s = sign as i64 * k;
    if s > 0 {
        1.0
    } else if s == 0 {
        0.5
    } else {
        0.0
    }
}

/// 1-D symbol of `L_{t,mode}`.
#[inline]
fn damping(mode: i8, t: f64, k: i64) -> f64 {
    if mode > 0 {
        1.0
    } else {
        (-2.0 * t * k.abs() as f64).exp()
    }
}

fn check_sign(sign: i8) -> Result<()> {
    if sign == 1 || sign == -1 {
        Ok(())
    } else {
        Err(NsgError::invalid(format!("sign must be +1 or -1, got {sign}")))
    }
}

fn check_axis(grid: &Grid, axis: usize) -> Result<()> {
    if axis < grid.dim() {
        Ok(())
    } else {
        Err(NsgError::invalid(format!("axis {axis} out of range for a {}-d grid", grid.dim())))
    }
}

/// `K_{±1}` along one axis: keep `sign·k_axis > 0`, halve `k_axis = 0`.
pub fn half_line_projection(f: &SpectralField, axis: usize, sign: i8) -> Result<SpectralField> {
    check_axis(f.grid(), axis)?;
    check_sign(sign)?;
    Ok(f.apply_real_symbol(|k| half_line(sign, k[axis])))
}

/// `K_α = K_{α_1} ⊗ ... ⊗ K_{α_d}`.
pub fn octant_projection(f: &SpectralField, alpha: &[i8; 3]) -> SpectralField {
    let dim = f.grid().dim();
    f.apply_real_symbol(|k| (0..dim).map(|a| half_line(alpha[a], k[a])).product())
}

/// `L_{t,mode}` along one axis: identity for `mode = 1`, `e^{-2t|k_axis|}` for `mode = -1`.
pub fn poisson_damped(f: &SpectralField, t: f64, axis: usize, mode: i8) -> Result<SpectralField> {
    if !(t >= 0.0) {
        return Err(NsgError::invalid(format!("Poisson damping needs t >= 0, got {t}")));
    }
    check_axis(f.grid(), axis)?;
    check_sign(mode)?;
    if mode > 0 || t == 0.0 {
        return Ok(f.clone());
    }
    Ok(f.apply_real_symbol(|k| damping(mode, t, k[axis])))
}

#[inline]
fn sector_symbol(k: &Wavevector, t: f64, alpha: &[i8; 3], beta: &[i8; 3], dim: usize) -> f64 {
    (0..dim).map(|a| half_line(beta[a], k[a]) * damping(alpha[a] * beta[a], t, k[a])).product()
}

/// `Z_{t,α,β} = ⊗_i K_{β_i} L_{t, α_i β_i}`.
pub fn sector_operator(f: &SpectralField, t: f64, s: &SectorSign) -> Result<SpectralField> {
    if !(t >= 0.0) {
        return Err(NsgError::invalid(format!("sector operator needs t >= 0, got {t}")));
    }
    let dim = f.grid().dim();
    if s.dim() != dim {
        return Err(NsgError::invalid("sector sign length differs from grid dimension"));
    }
    Ok(f.apply_real_symbol(|k| sector_symbol(k, t, &s.alpha, &s.beta, dim)))
}

/// Direct form `P_t(f,g) = e^{tΛ}(e^{-tΛ}f · e^{-tΛ}g)` with a dealiased product.
pub fn product_operator(f: &SpectralField, g: &SpectralField, t: f64, fraction: f64) -> Result<SpectralField> {
    check_time(t)?;
    let ef = gevrey_multiplier(f, -t)?;
    let eg = gevrey_multiplier(g, -t)?;
    gevrey_multiplier(&dealiased_product(&ef, &eg, fraction)?, t)
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(NsgError::invalid(format!("product operator needs t >= 0, got {t}")))
    }
}

/// One `(α, β, γ)` term `K_α(Z_{t,α,β}f · Z_{t,α,γ}g)` of the sector sum.
#[derive(Debug, Clone)]
pub struct SectorTerm {
    pub alpha: [i8; 3],
    pub beta: [i8; 3],
    pub gamma: [i8; 3],
    pub value: SpectralField,
}

/// Every term of the sector decomposition, in the fixed enumeration order
/// (α slowest, then β, then γ).
pub fn sector_terms(f: &SpectralField, g: &SpectralField, t: f64, fraction: f64) -> Result<Vec<SectorTerm>> {
    check_time(t)?;
    f.check_same_shape(g)?;
    if f.components() != 1 {
        return Err(NsgError::invalid("product operator expects scalar fields"));
    }
    let dim = f.grid().dim();
    let signs = sign_vectors(dim);
    let m = signs.len();
    // z[a * m + b] = Z_{t, signs[a], signs[b]} applied to f (resp. g).
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|a| (0..m).map(move |b| (a, b))).collect();
    let zf: Vec<SpectralField> = pairs
        .par_iter()
        .map(|&(a, b)| f.apply_real_symbol(|k| sector_symbol(k, t, &signs[a], &signs[b], dim)))
        .collect();
    let zg: Vec<SpectralField> = pairs
        .par_iter()
        .map(|&(a, c)| g.apply_real_symbol(|k| sector_symbol(k, t, &signs[a], &signs[c], dim)))
        .collect();
    let triples: Vec<(usize, usize, usize)> =
        (0..m).flat_map(|a| (0..m).flat_map(move |b| (0..m).map(move |c| (a, b, c)))).collect();
    triples
        .par_iter()
        .map(|&(a, b, c)| {
            let lhs = &zf[a * m + b];
            let rhs = &zg[a * m + c];
            let value = if lhs.is_zero() || rhs.is_zero() {
                SpectralField::zeros(*f.grid(), 1)
            } else {
                octant_projection(&dealiased_product(lhs, rhs, fraction)?, &signs[a])
            };
            Ok(SectorTerm { alpha: signs[a], beta: signs[b], gamma: signs[c], value })
        })
        .collect()
}

/// Sector-sum form `P_t(f,g) = Σ_{(α,β,γ)} K_α(Z_{t,α,β}f · Z_{t,α,γ}g)`; the
/// reduction runs in enumeration order so the result is bit-stable.
pub fn product_operator_decomposed(
    f: &SpectralField,
    g: &SpectralField,
    t: f64,
    fraction: f64,
) -> Result<SpectralField> {
    let terms = sector_terms(f, g, t, fraction)?;
    let mut acc = SpectralField::zeros(*f.grid(), 1);
    for term in &terms {
        acc.add_assign_scaled(1.0, &term.value);
    }
    Ok(acc)
}

/// Refined Gevrey weight data: `ε`, horizon `T`, tabulated `λ(t)` and the
/// subscript `a` of `A_a`.
#[derive(Debug, Clone, Serialize)]
pub struct RefinedWeight {
    pub epsilon: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    /// `(t, λ(t))` samples, linearly interpolated; a single entry means constant.
    pub lambda: Vec<(f64, f64)>,
    pub a: f64,
}

impl RefinedWeight {
    pub fn new(epsilon: f64, t_final: f64, lambda: Vec<(f64, f64)>, a: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(NsgError::invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        if !(t_final > 0.0) {
            return Err(NsgError::invalid("T must be positive"));
        }
        if a != 2.0 && a != 4.0 {
            return Err(NsgError::invalid(format!("weight subscript must be 2 or 4, got {a}")));
        }
        if lambda.is_empty() || lambda.iter().any(|&(_, l)| !(l >= 0.0 && l.is_finite())) {
            return Err(NsgError::invalid("lambda must be a nonempty table of finite nonnegative values"));
        }
        if lambda.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(NsgError::invalid("lambda table times must increase"));
        }
        Ok(RefinedWeight { epsilon, t_final, lambda, a })
    }

    /// `λ(t) ≡ λ`, the constant-in-time schedule.
    pub fn constant(epsilon: f64, t_final: f64, lambda: f64, a: f64) -> Result<Self> {
        Self::new(epsilon, t_final, vec![(0.0, lambda)], a)
    }

    pub fn lambda_at(&self, t: f64) -> f64 {
        let tab = &self.lambda;
        if tab.len() == 1 || t <= tab[0].0 {
            return tab[0].1;
        }
        for w in tab.windows(2) {
            if t <= w[1].0 {
                let s = (t - w[0].0) / (w[1].0 - w[0].0);
                return w[0].1 + s * (w[1].1 - w[0].1);
            }
        }
        tab[tab.len() - 1].1
    }

    /// `max_{[0,T]} λ`
    pub fn lambda_max(&self) -> f64 {
        self.lambda.iter().map(|e| e.1).fold(0.0, f64::max)
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if t >= 0.0 && t <= self.t_final * (1.0 + 1e-12) {
            Ok(())
        } else {
            Err(NsgError::invalid(format!("t = {t} outside [0, {}]", self.t_final)))
        }
    }

    /// `A_a(λ(s), t) = exp(-λ(s)² t / (a (1-ε) T))`
    pub fn value_with_lambda_at(&self, s: f64, t: f64) -> Result<f64> {
        self.check_t(t)?;
        self.check_t(s)?;
        let l = self.lambda_at(s);
        Ok((-l * l * t / (self.a * (1.0 - self.epsilon) * self.t_final)).exp())
    }

    /// Gevrey exponent `λ(t) t / √T` paired with the weight at `t`.
    pub fn gevrey_exponent(&self, t: f64) -> f64 {
        self.lambda_at(t) * t / self.t_final.sqrt()
    }
}

/// `A_a(t) = exp(-λ(t)² t / (a (1-ε) T))`, in `(0, 1]`.
pub fn refined_weight_value(w: &RefinedWeight, t: f64) -> Result<f64> {
    w.value_with_lambda_at(t, t)
}

/// `‖f‖_{E^ε_{p,q}(T)}`: both `E_{p,q}` constituents of `A_a(t) e^{λ(t) t/√T Λ} f(t)`.
pub fn refined_gevrey_norm(
    series: &[(f64, SpectralField)],
    w: &RefinedWeight,
    p: f64,
    q: Exponent,
    bank: &LPFilterBank,
) -> Result<f64> {
    Ok(refined_gevrey_report(series, w, p, q, bank)?.value)
}

pub fn refined_gevrey_report(
    series: &[(f64, SpectralField)],
    w: &RefinedWeight,
    p: f64,
    q: Exponent,
    bank: &LPFilterBank,
) -> Result<EpqNorm> {
    let weighted = series
        .iter()
        .map(|(t, f)| {
            let weight = refined_weight_value(w, *t)?;
            Ok((*t, gevrey_multiplier(f, w.gevrey_exponent(*t))?.scale(weight)))
        })
        .collect::<Result<Vec<_>>>()?;
    epq_from_blocks(&BlockSeries::new(&weighted, p, bank)?, q)
}

/// `λ = 2 sqrt((1-ε) ln(‖u_h‖^{-1/2}))`, defined for `0 < ‖u_h‖ < 1`.
pub fn lambda_schedule(uh_norm: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(NsgError::invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(uh_norm > 0.0 && uh_norm < 1.0) {
        return Err(NsgError::IncompatibleSchedule { uh_norm });
    }
    Ok(2.0 * ((1.0 - epsilon) * (-0.5 * uh_norm.ln())).sqrt())
}

/// `L¹` mass of the periodic kernel of `e^{-aΛ}`, by grid quadrature of the
/// synthesized kernel.
pub fn gevrey_kernel_l1_mass(grid: &Grid, a: f64) -> Result<f64> {
    if !(a >= 0.0) {
        return Err(NsgError::invalid("kernel mass needs a >= 0"));
    }
    let c = 1.0 / grid.volume();
    let delta = SpectralField::from_coeffs(*grid, 1, vec![Complex64::new(c, 0.0); grid.len()])?;
    let kernel = gevrey_multiplier(&delta, -a)?.to_physical();
    Ok(kernel.iter().map(|v| v.abs()).sum::<f64>() * grid.cell_volume())
}

/// `L¹` mass of the 1D periodic kernel of `e^{-a|k|}` sampled with `n` points.
/// The d-dimensional kernel of `e^{-aΛ}` is the tensor product of these, so its
/// mass is this value to the power d.
pub fn poisson_kernel_l1_mass(n: usize, a: f64) -> Result<f64> {
    if !(a >= 0.0) || n < 8 || !n.is_power_of_two() {
        return Err(NsgError::invalid("kernel mass needs a >= 0 and a power-of-two n >= 8"));
    }
    let period = 2.0 * std::f64::consts::PI;
    let mut line: Vec<Complex64> = (0..n)
        .map(|i| {
            let k = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
            let w = if i == n / 2 { 0.0 } else { (-a * k.abs()).exp() };
            Complex64::new(w / period, 0.0)
        })
        .collect();
    crate::fft::inverse_1d(&mut line);
    Ok(line.iter().map(|v| v.re.abs()).sum::<f64>() * period / n as f64)
}

/// `‖e^{tΔ/2 + √t Λ} f‖_p / ‖f‖_p`.
pub fn heat_gevrey_ratio(f: &SpectralField, t: f64, p: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(NsgError::invalid("t must be nonnegative"));
    }
    let rt = t.sqrt();
    let mut out = f.clone();
    let grid = *f.grid();
    let n = grid.len();
    for flat in 0..n {
        let k = grid.wavevector(flat);
        let l1 = crate::grid::norm_l1(&k) as f64;
        let s = (-0.5 * t * norm_sq(&k) + rt * l1).exp();
        for c in 0..f.components() {
            out.coeffs_mut()[c * n + flat] *= s;
        }
    }
    let base = crate::lp::lp_norm(f, p);
    if base == 0.0 {
        return Err(NsgError::invalid("zero field"));
    }
    Ok(crate::lp::lp_norm(&out, p) / base)
}
