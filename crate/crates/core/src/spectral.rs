//! Diagonal Fourier multipliers and the quadratic Navier-Stokes nonlinearity.
//!
//! Every operator here acts mode by mode on the integer lattice, except the
//! products, which are formed pointwise on the physical grid with the inputs and
//! the output truncated to the dealiasing band `|k_j| <= fraction * n/2`.

use num_complex::Complex64;

use crate::error::{NsgError, Result};
use crate::field::{MultiIndex, SpectralField, VelocityField};
use crate::grid::{norm_l1, norm_sq, Grid, Wavevector};

/// Default dealiasing fraction (2/3 rule).
pub const TWO_THIRDS: f64 = 2.0 / 3.0;

/// `ℙ = Id - ∇(-Δ)^{-1}div`: per mode `û - k (k·û)/|k|²`; the mean mode is untouched.
pub fn leray_project(f: &SpectralField) -> Result<VelocityField> {
    let grid = *f.grid();
    let dim = grid.dim();
    if f.components() != dim {
        return Err(NsgError::invalid(format!("Leray projection needs {dim} components, got {}", f.components())));
    }
    Ok(VelocityField::new_unchecked(project_components(f)))
}

fn project_components(f: &SpectralField) -> SpectralField {
    let grid = *f.grid();
    let dim = grid.dim();
    let n = grid.len();
    let mut out = f.clone();
    let src = f.coeffs();
    let dst = out.coeffs_mut();
    for flat in 1..n {
        let k = grid.wavevector(flat);
        let k2 = norm_sq(&k);
        let mut dot = Complex64::new(0.0, 0.0);
        for c in 0..dim {
            dot += src[c * n + flat] * k[c] as f64;
        }
        let dot = dot / k2;
        for c in 0..dim {
            dst[c * n + flat] = src[c * n + flat] - dot * k[c] as f64;
        }
    }
    out
}

/// `e^{tΔ}`: multiply by `e^{-t|k|²}` (Euclidean `|k|`).
pub fn heat_semigroup(f: &SpectralField, t: f64) -> Result<SpectralField> {
    if !(t >= 0.0) {
        return Err(NsgError::invalid(format!("heat semigroup needs t >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    Ok(f.apply_real_symbol(|k| (-t * norm_sq(k)).exp()))
}

pub(crate) fn heat_velocity(u: &VelocityField, t: f64) -> Result<VelocityField> {
    Ok(VelocityField::new_unchecked(heat_semigroup(u, t)?))
}

/// `e^{aΛ}` with `Λ` the l1 symbol `|k|_1 = Σ|k_j|`; `a` may be negative.
///
/// Zero coefficients stay zero. A non-finite product is reported as an
/// overflow on the smallest offending l1 shell.
pub fn gevrey_multiplier(f: &SpectralField, a: f64) -> Result<SpectralField> {
    if a == 0.0 {
        return Ok(f.clone());
    }
    let grid = *f.grid();
    let n = grid.len();
    let mut out = f.clone();
    let mut worst_shell: Option<i64> = None;
    let table: Vec<(f64, i64)> = (0..n)
        .map(|flat| {
            let l1 = norm_l1(&grid.wavevector(flat));
            ((a * l1 as f64).exp(), l1)
        })
        .collect();
    for chunk in out.coeffs_mut().chunks_mut(n) {
        for (v, &(s, l1)) in chunk.iter_mut().zip(&table) {
            if v.re == 0.0 && v.im == 0.0 {
                continue;
            }
            *v *= s;
            if !(v.re.is_finite() && v.im.is_finite()) {
                worst_shell = Some(worst_shell.map_or(l1, |w| w.min(l1)));
            }
        }
    }
    match worst_shell {
        Some(shell) => Err(NsgError::Overflow { shell, a }),
        None => Ok(out),
    }
}

/// Largest `a` for which `e^{a|k|_1}` stays comfortably finite on this grid.
pub fn overflow_safe_exponent(grid: &Grid) -> f64 {
    let max_l1 = (grid.n() / 2 * grid.dim()) as f64;
    600.0 / max_l1
}

/// `∂^α`: multiply by `Π (i k_j)^{α_j}`. Odd orders vanish on Nyquist components.
pub fn derivative(f: &SpectralField, alpha: MultiIndex) -> Result<SpectralField> {
    let grid = *f.grid();
    if alpha.0.iter().skip(grid.dim()).any(|&a| a != 0) {
        return Err(NsgError::invalid("multi-index has entries beyond the grid dimension"));
    }
    if alpha.order() == 0 {
        return Ok(f.clone());
    }
    let half = (grid.n() / 2) as i64;
    Ok(f.apply_symbol(|k| derivative_symbol(k, &alpha, half)))
}

fn derivative_symbol(k: &Wavevector, alpha: &MultiIndex, half: i64) -> Complex64 {
    let mut s = Complex64::new(1.0, 0.0);
    for (j, &order) in alpha.0.iter().enumerate() {
        if order == 0 {
            continue;
        }
        if order % 2 == 1 && k[j].abs() == half {
            return Complex64::new(0.0, 0.0);
        }
        s *= Complex64::new(0.0, k[j] as f64).powu(order);
    }
    s
}

/// `Δ`: multiply by `-|k|²`.
pub fn laplacian(f: &SpectralField) -> SpectralField {
    f.apply_real_symbol(|k| -norm_sq(k))
}

/// Cutoff wavenumber of the dealiasing band.
pub fn dealias_cutoff(grid: &Grid, fraction: f64) -> f64 {
    fraction * grid.n() as f64 / 2.0
}

pub fn check_fraction(fraction: f64) -> Result<()> {
    if fraction > 0.0 && fraction <= 1.0 {
        Ok(())
    } else {
        Err(NsgError::invalid(format!("dealias fraction must lie in (0, 1], got {fraction}")))
    }
}

pub fn in_band(k: &Wavevector, cutoff: f64) -> bool {
    k.iter().all(|&kk| (kk.abs() as f64) <= cutoff + 1e-12)
}

/// Zero every mode with some `|k_j| > fraction * n/2`.
pub fn dealias(f: &SpectralField, fraction: f64) -> SpectralField {
    let cutoff = dealias_cutoff(f.grid(), fraction);
    f.apply_real_symbol(|k| if in_band(k, cutoff) { 1.0 } else { 0.0 })
}

fn band_mask(grid: &Grid, fraction: f64) -> Vec<bool> {
    let cutoff = dealias_cutoff(grid, fraction);
    grid.wavevectors().map(|k| in_band(&k, cutoff)).collect()
}

fn truncated_physical(f: &[Complex64], grid: &Grid, mask: &[bool]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> =
        f.iter().zip(mask).map(|(v, &m)| if m { *v } else { Complex64::new(0.0, 0.0) }).collect();
    crate::fft::inverse(grid, &mut data);
    data
}

fn truncated_spectral(mut data: Vec<Complex64>, grid: &Grid, mask: &[bool]) -> Vec<Complex64> {
    crate::fft::forward(grid, &mut data);
    for (v, &m) in data.iter_mut().zip(mask) {
        if !m {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    data
}

/// Dealiased pointwise product of two scalar (possibly complex-valued) fields.
pub fn dealiased_product(f: &SpectralField, g: &SpectralField, fraction: f64) -> Result<SpectralField> {
    f.check_same_shape(g)?;
    if f.components() != 1 {
        return Err(NsgError::invalid("dealiased_product expects scalar fields"));
    }
    check_fraction(fraction)?;
    let grid = *f.grid();
    let mask = band_mask(&grid, fraction);
    let pf = truncated_physical(f.coeffs(), &grid, &mask);
    let pg = truncated_physical(g.coeffs(), &grid, &mask);
    let prod: Vec<Complex64> = pf.iter().zip(&pg).map(|(a, b)| a * b).collect();
    SpectralField::from_coeffs(grid, 1, truncated_spectral(prod, &grid, &mask))
}

/// The bilinear form `b(u, v) = ℙ∇·(u ⊗ v)` with `(∇·(u⊗v))_i = Σ_j ∂_j(u_i v_j)`.
pub fn bilinear_term(u: &SpectralField, v: &SpectralField, fraction: f64) -> Result<SpectralField> {
    u.check_same_shape(v)?;
    let grid = *u.grid();
    let dim = grid.dim();
    if u.components() != dim {
        return Err(NsgError::invalid("bilinear term needs vector fields with dim components"));
    }
    check_fraction(fraction)?;
    let n = grid.len();
    let mask = band_mask(&grid, fraction);
    let pu: Vec<Vec<Complex64>> = (0..dim).map(|c| truncated_physical(u.component(c), &grid, &mask)).collect();
    let same = std::ptr::eq(u, v) || u == v;
    let pv: Vec<Vec<Complex64>> =
        if same { pu.clone() } else { (0..dim).map(|c| truncated_physical(v.component(c), &grid, &mask)).collect() };

    let mut div = vec![Complex64::new(0.0, 0.0); dim * n];
    for i in 0..dim {
        for j in 0..dim {
            let prod: Vec<Complex64> = pu[i].iter().zip(&pv[j]).map(|(a, b)| a * b).collect();
            let spec = truncated_spectral(prod, &grid, &mask);
            for (flat, s) in spec.iter().enumerate() {
                let kj = grid.wavevector(flat)[j] as f64;
                div[i * n + flat] += Complex64::new(0.0, kj) * s;
            }
        }
    }
    if div.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(NsgError::Blowup { last_good_time: f64::NAN, detail: "non-finite nonlinear term".into() });
    }
    let field = SpectralField::from_coeffs(grid, dim, div)?;
    Ok(project_components(&field))
}

/// `ℙ∇·(u ⊗ u)`, dealiased; the result is divergence-free.
pub fn nonlinear_term(u: &VelocityField, fraction: f64) -> Result<VelocityField> {
    Ok(VelocityField::new_unchecked(bilinear_term(u, u, fraction)?))
}
