//! Initial data: Taylor-Green vortices, seeded random divergence-free fields
//! with a prescribed power-law spectrum, and synthetic analytic profiles.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{NsgError, Result};
use crate::field::{SpectralField, VelocityField};
use crate::grid::{norm_l1, norm_sq, Grid};
use crate::lp::{besov_norm, build_filter_bank, Exponent, LPFilterBank, NormSpec};
use crate::spectral::{dealias, leray_project};

/// `A (sin x cos y, -cos x sin y)` in 2D; `A (sin x cos y cos z, -cos x sin y cos z, 0)` in 3D.
pub fn taylor_green(grid: Grid, amplitude: f64) -> Result<VelocityField> {
    let n = grid.len();
    let mut samples = vec![0.0; grid.dim() * n];
    for flat in 0..n {
        let [x, y, z] = grid.point(flat);
        let cz = if grid.dim() == 3 { z.cos() } else { 1.0 };
        samples[flat] = amplitude * x.sin() * y.cos() * cz;
        samples[n + flat] = -amplitude * x.cos() * y.sin() * cz;
    }
    let f = SpectralField::to_spectral(&samples, grid, grid.dim())?;
    // Round-off in the transform leaves ~1e-17 noise; the projection removes it.
    leray_project(&f)
}

/// How per-mode amplitudes are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeModel {
    /// Complex Gaussian coefficients times `|k|₁^{-σ}`.
    #[default]
    Gaussian,
    /// Random directions with modulus exactly `|k|₁^{-σ}` per mode.
    ExactSpectrum,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomDataSpec {
    pub seed: u64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Target `Ḃ^{3/p-1}_{p,q}` norm; the raw draw is kept when absent.
    #[serde(default)]
    pub target_norm: Option<f64>,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_q")]
    pub q: Exponent,
    /// Largest `|k_j|` that receives energy.
    #[serde(default)]
    pub kmax: Option<f64>,
    /// Apply the product dealiasing mask to the data itself.
    #[serde(default)]
    pub dealias_fraction: Option<f64>,
    #[serde(default)]
    pub amplitudes: AmplitudeModel,
}

fn default_sigma() -> f64 {
    2.0
}
fn default_p() -> f64 {
    2.0
}
fn default_q() -> Exponent {
    Exponent::Finite(2.0)
}

impl RandomDataSpec {
    pub fn new(seed: u64, sigma: f64) -> Self {
        RandomDataSpec {
            seed,
            sigma,
            target_norm: None,
            p: default_p(),
            q: default_q(),
            kmax: None,
            dealias_fraction: None,
            amplitudes: AmplitudeModel::Gaussian,
        }
    }

    pub fn with_target(mut self, norm: f64) -> Self {
        self.target_norm = Some(norm);
        self
    }

    pub fn with_kmax(mut self, kmax: f64) -> Self {
        self.kmax = Some(kmax);
        self
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// Modes that may carry energy: nonzero, not on a Nyquist plane, inside `kmax`.
fn admissible(grid: &Grid, k: &[i64; 3], kmax: Option<f64>) -> bool {
    let l1 = norm_l1(k);
    if l1 == 0 || grid.is_nyquist(k) {
        return false;
    }
    match kmax {
        Some(m) => k.iter().all(|c| (*c as f64).abs() <= m),
        None => true,
    }
}

/// Seeded divergence-free field with `|û(k)| ∝ |k|₁^{-σ}`, mean zero, no
/// Nyquist content, optionally scaled to a target critical Besov norm.
pub fn random_velocity(grid: Grid, spec: &RandomDataSpec) -> Result<VelocityField> {
    let bank = build_filter_bank(&grid);
    random_velocity_with_bank(&bank, spec)
}

pub fn random_velocity_with_bank(bank: &LPFilterBank, spec: &RandomDataSpec) -> Result<VelocityField> {
    let grid = *bank.grid();
    if !spec.sigma.is_finite() {
        return Err(NsgError::invalid("sigma must be finite"));
    }
    let d = grid.dim();
    let n = grid.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut raw = SpectralField::zeros(grid, d);
    for flat in 0..n {
        let k = grid.wavevector(flat);
        if !admissible(&grid, &k, spec.kmax) {
            continue;
        }
        let w = (norm_l1(&k) as f64).powf(-spec.sigma);
        for c in 0..d {
            raw.coeffs_mut()[c * n + flat] = gaussian(&mut rng) * w;
        }
    }
    let mut f = leray_project(&raw.hermitian_part())?.into_field();
    if spec.amplitudes == AmplitudeModel::ExactSpectrum {
        for flat in 0..n {
            let k = grid.wavevector(flat);
            let m: f64 = (0..d).map(|c| f.coeffs()[c * n + flat].norm_sqr()).sum::<f64>().sqrt();
            if m > 0.0 {
                let s = (norm_l1(&k) as f64).powf(-spec.sigma) / m;
                for c in 0..d {
                    f.coeffs_mut()[c * n + flat] *= s;
                }
            }
        }
    }
    if let Some(frac) = spec.dealias_fraction {
        crate::spectral::check_fraction(frac)?;
        f = dealias(&f, frac);
    }
    if let Some(target) = spec.target_norm {
        if !(target >= 0.0) {
            return Err(NsgError::invalid("target norm must be nonnegative"));
        }
        let norm = besov_norm(&f, &NormSpec::critical(spec.p, spec.q)?, bank)?;
        if norm == 0.0 {
            return Err(NsgError::invalid("random draw has no admissible modes"));
        }
        f = f.scale(target / norm);
    }
    VelocityField::new(f)
}

/// Deterministic divergence-free field with `|û(k)| = |k|₁^{-σ}` on every admissible mode.
///
/// In 2D the direction is `i k^⊥/|k|`; in 3D it is `i (k × e)/|k × e|` with
/// `e` the first axis not parallel to `k`.
pub fn power_law_velocity(grid: Grid, sigma: f64) -> Result<VelocityField> {
    let d = grid.dim();
    let n = grid.len();
    let mut f = SpectralField::zeros(grid, d);
    for flat in 0..n {
        let k = grid.wavevector(flat);
        if !admissible(&grid, &k, None) {
            continue;
        }
        let w = (norm_l1(&k) as f64).powf(-sigma);
        let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
        let dir: [f64; 3] = if d == 2 {
            let m = norm_sq(&k).sqrt();
            [-kf[1] / m, kf[0] / m, 0.0]
        } else {
            let e = if k[1] != 0 || k[2] != 0 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let c = [kf[1] * e[2] - kf[2] * e[1], kf[2] * e[0] - kf[0] * e[2], kf[0] * e[1] - kf[1] * e[0]];
            let m = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
            [c[0] / m, c[1] / m, c[2] / m]
        };
        for c in 0..d {
            // Odd real direction times i keeps the field real.
            f.coeffs_mut()[c * n + flat] = Complex64::new(0.0, w * dir[c]);
        }
    }
    VelocityField::new(f)
}

/// Scalar field with `û(k) = e^{-b|k|₁}` on every non-Nyquist mode.
pub fn exponential_profile(grid: Grid, b: f64) -> SpectralField {
    let mut f = SpectralField::zeros(grid, 1);
    for flat in 0..grid.len() {
        let k = grid.wavevector(flat);
        if !grid.is_nyquist(&k) {
            f.coeffs_mut()[flat] = Complex64::new((-b * norm_l1(&k) as f64).exp(), 0.0);
        }
    }
    f
}

/// Seeded real scalar field with Gaussian coefficients on `|k_j| <= kmax`, mean included.
pub fn random_scalar(grid: Grid, seed: u64, kmax: f64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralField::zeros(grid, 1);
    for flat in 0..grid.len() {
        let k = grid.wavevector(flat);
        if grid.is_nyquist(&k) || k.iter().any(|c| (*c as f64).abs() > kmax) {
            continue;
        }
        f.coeffs_mut()[flat] = gaussian(&mut rng);
    }
    f.hermitian_part()
}

/// `Δ_j` of a seeded random field covering the whole resolved lattice.
pub fn random_block_field(bank: &LPFilterBank, j: i32, seed: u64) -> Result<SpectralField> {
    let grid = *bank.grid();
    let f = random_scalar(grid, seed, grid.n() as f64);
    bank.dyadic_block(&f, j)
}
