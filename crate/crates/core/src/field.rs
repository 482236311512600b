use std::ops::Deref;

use num_complex::Complex64;

use crate::error::{NsgError, Result};
use crate::fft;
use crate::grid::{norm_sq, Grid, Wavevector};

/// Relative divergence tolerance for [`VelocityField`].
pub const DIV_TOL: f64 = 1e-12;

/// Fourier coefficients of an `m`-component field on a periodic grid.
///
/// Coefficients are stored component-major; within a component they follow the
/// grid's flat lattice order. Real-valued fields are Hermitian symmetric, but the
/// type also carries complex-valued intermediates (half-line projections).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    components: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid, components: usize) -> Self {
        assert!(components >= 1, "a field needs at least one component");
        SpectralField { grid, components, coeffs: vec![Complex64::new(0.0, 0.0); components * grid.len()] }
    }

    pub fn from_coeffs(grid: Grid, components: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if components == 0 || coeffs.len() != components * grid.len() {
            return Err(NsgError::invalid(format!(
                "expected {} coefficients for {} components, got {}",
                components * grid.len(),
                components,
                coeffs.len()
            )));
        }
        Ok(SpectralField { grid, components, coeffs })
    }

    /// Transform real physical samples (component-major, flat grid order).
    pub fn to_spectral(samples: &[f64], grid: Grid, components: usize) -> Result<Self> {
        if components == 0 || samples.len() != components * grid.len() {
            return Err(NsgError::invalid(format!(
                "expected {} samples, got {}",
                components * grid.len(),
                samples.len()
            )));
        }
        let data: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Self::from_physical_complex(data, grid, components)
    }

    pub fn from_physical_complex(mut data: Vec<Complex64>, grid: Grid, components: usize) -> Result<Self> {
        if components == 0 || data.len() != components * grid.len() {
            return Err(NsgError::invalid("physical buffer does not match grid"));
        }
        for chunk in data.chunks_mut(grid.len()) {
            fft::forward(&grid, chunk);
        }
        Ok(SpectralField { grid, components, coeffs: data })
    }

    /// Real physical samples; the imaginary part (zero for Hermitian fields) is dropped.
    pub fn to_physical(&self) -> Vec<f64> {
        self.to_physical_complex().into_iter().map(|v| v.re).collect()
    }

    pub fn to_physical_complex(&self) -> Vec<Complex64> {
        let mut data = self.coeffs.clone();
        for chunk in data.chunks_mut(self.grid.len()) {
            fft::inverse(&self.grid, chunk);
        }
        data
    }

    pub fn component_physical_complex(&self, c: usize) -> Vec<Complex64> {
        let mut data = self.component(c).to_vec();
        fft::inverse(&self.grid, &mut data);
        data
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let n = self.grid.len();
        &self.coeffs[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let n = self.grid.len();
        &mut self.coeffs[c * n..(c + 1) * n]
    }

    /// Extract one component as a scalar field.
    pub fn scalar(&self, c: usize) -> SpectralField {
        SpectralField { grid: self.grid, components: 1, coeffs: self.component(c).to_vec() }
    }

    /// Stack scalar fields into a vector field.
    pub fn stack(parts: &[SpectralField]) -> Result<SpectralField> {
        let first = parts.first().ok_or_else(|| NsgError::invalid("nothing to stack"))?;
        let mut coeffs = Vec::with_capacity(parts.len() * first.grid.len());
        for p in parts {
            if p.grid != first.grid || p.components != 1 {
                return Err(NsgError::invalid("stack expects scalar fields on one grid"));
            }
            coeffs.extend_from_slice(&p.coeffs);
        }
        Ok(SpectralField { grid: first.grid, components: parts.len(), coeffs })
    }

    pub fn mode(&self, c: usize, k: &Wavevector) -> Complex64 {
        self.component(c)[self.grid.flat_index(k)]
    }

    pub fn set_mode(&mut self, c: usize, k: &Wavevector, value: Complex64) {
        let idx = self.grid.flat_index(k);
        self.component_mut(c)[idx] = value;
    }

    /// Set `k` and its conjugate partner `-k` so the field stays real.
    pub fn set_real_mode(&mut self, c: usize, k: &Wavevector, value: Complex64) {
        self.set_mode(c, k, value);
        self.set_mode(c, &[-k[0], -k[1], -k[2]], value.conj());
    }

    /// Multiply every coefficient by `symbol(k)` (same symbol on every component).
    pub fn apply_symbol<F>(&self, symbol: F) -> SpectralField
    where
        F: Fn(&Wavevector) -> Complex64,
    {
        let mut out = self.clone();
        let n = self.grid.len();
        for flat in 0..n {
            let s = symbol(&self.grid.wavevector(flat));
            for c in 0..self.components {
                out.coeffs[c * n + flat] *= s;
            }
        }
        out
    }

    pub fn apply_real_symbol<F>(&self, symbol: F) -> SpectralField
    where
        F: Fn(&Wavevector) -> f64,
    {
        self.apply_symbol(|k| Complex64::new(symbol(k), 0.0))
    }

    /// Multiply by a tabulated real symbol (one value per lattice point).
    pub fn apply_table(&self, table: &[f64]) -> SpectralField {
        debug_assert_eq!(table.len(), self.grid.len());
        let mut out = self.clone();
        for chunk in out.coeffs.chunks_mut(self.grid.len()) {
            for (v, s) in chunk.iter_mut().zip(table) {
                *v *= *s;
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> SpectralField {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        self.axpy(-1.0, other)
    }

    /// `self + a * other`
    pub fn axpy(&self, a: f64, other: &SpectralField) -> SpectralField {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        assert_eq!(self.components, other.components, "component mismatch");
        let mut out = self.clone();
        for (v, w) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *v += w * a;
        }
        out
    }

    pub fn add_assign_scaled(&mut self, a: f64, other: &SpectralField) {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        assert_eq!(self.components, other.components, "component mismatch");
        for (v, w) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *v += w * a;
        }
    }

    /// L² norm over the torus, by Parseval: `(2π)^{d/2} (Σ|c_k|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.coeffs.iter().map(|v| v.norm_sqr()).sum();
        (self.grid.volume() * s).sqrt()
    }

    /// Euclidean norm of the raw coefficient vector.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Max of `|f(x)|` (Euclidean over components) on the physical grid.
    pub fn sup_norm(&self) -> f64 {
        let phys = self.to_physical_complex();
        let n = self.grid.len();
        (0..n).map(|i| (0..self.components).map(|c| phys[c * n + i].norm_sqr()).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    /// Largest violation of `c(-k) = conj(c(k))`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.len();
        let mut worst: f64 = 0.0;
        for c in 0..self.components {
            let comp = self.component(c);
            for flat in 0..n {
                let neg = self.grid.negated_index(flat);
                worst = worst.max((comp[neg] - comp[flat].conj()).norm());
            }
        }
        worst
    }

    /// Project onto the real part: `(c(k) + conj(c(-k))) / 2`.
    pub fn hermitian_part(&self) -> SpectralField {
        let n = self.grid.len();
        let mut out = self.clone();
        for c in 0..self.components {
            let comp = self.component(c);
            let dst = &mut out.coeffs[c * n..(c + 1) * n];
            for flat in 0..n {
                dst[flat] = (comp[flat] + comp[self.grid.negated_index(flat)].conj()) * 0.5;
            }
        }
        out
    }

    /// `max|a - b| / max(max|b|, tiny)` over coefficients.
    pub fn relative_error(&self, reference: &SpectralField) -> f64 {
        let diff = self.sub(reference).coeff_norm();
        let base = reference.coeff_norm();
        if base == 0.0 {
            diff
        } else {
            diff / base
        }
    }

    pub(crate) fn check_same_shape(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(NsgError::invalid("fields live on different grids"));
        }
        if self.components != other.components {
            return Err(NsgError::invalid(format!("component mismatch: {} vs {}", self.components, other.components)));
        }
        Ok(())
    }

    /// Zero the mean (k = 0) mode.
    pub fn without_mean(&self) -> SpectralField {
        let mut out = self.clone();
        for c in 0..self.components {
            out.component_mut(c)[0] = Complex64::new(0.0, 0.0);
        }
        out
    }

    /// Largest relative divergence `|k·û| / (|k||û|)` over nonzero modes.
    pub fn divergence_defect(&self) -> f64 {
        if self.components != self.grid.dim() {
            return f64::INFINITY;
        }
        let n = self.grid.len();
        let mut worst: f64 = 0.0;
        let scale = self.max_coeff();
        for flat in 1..n {
            let k = self.grid.wavevector(flat);
            let mut dot = Complex64::new(0.0, 0.0);
            let mut mag = 0.0;
            for c in 0..self.components {
                let v = self.coeffs[c * n + flat];
                dot += v * k[c] as f64;
                mag += v.norm_sqr();
            }
            let denom = norm_sq(&k).sqrt() * mag.sqrt();
            // Round-off floor relative to the whole field.
            let floor = 1e-15 * scale * norm_sq(&k).sqrt();
            if dot.norm() > floor {
                worst = worst.max(dot.norm() / denom);
            }
        }
        worst
    }
}

/// A divergence-free vector field with `components == grid.dim()`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField(SpectralField);

impl VelocityField {
    /// Wrap a field after checking the divergence tolerance.
    pub fn new(field: SpectralField) -> Result<Self> {
        if field.components() != field.grid().dim() {
            return Err(NsgError::invalid(format!(
                "velocity needs {} components, got {}",
                field.grid().dim(),
                field.components()
            )));
        }
        let defect = field.divergence_defect();
        if defect > DIV_TOL {
            return Err(NsgError::invalid(format!("field is not divergence-free (relative defect {defect:e})")));
        }
        Ok(VelocityField(field))
    }

    pub fn zeros(grid: Grid) -> Self {
        VelocityField(SpectralField::zeros(grid, grid.dim()))
    }

    /// For results that are divergence-free by construction.
    pub(crate) fn new_unchecked(field: SpectralField) -> Self {
        debug_assert_eq!(field.components(), field.grid().dim());
        VelocityField(field)
    }

    pub fn as_field(&self) -> &SpectralField {
        &self.0
    }

    pub fn into_field(self) -> SpectralField {
        self.0
    }
}

impl Deref for VelocityField {
    type Target = SpectralField;
    fn deref(&self) -> &SpectralField {
        &self.0
    }
}

impl AsRef<SpectralField> for VelocityField {
    fn as_ref(&self) -> &SpectralField {
        &self.0
    }
}

/// Nonnegative derivative orders, one per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize)]
pub struct MultiIndex(pub [u32; 3]);

impl MultiIndex {
    pub fn new(orders: &[u32]) -> Result<Self> {
        if orders.len() > 3 {
            return Err(NsgError::invalid("multi-index has more than 3 entries"));
        }
        let mut a = [0u32; 3];
        a[..orders.len()].copy_from_slice(orders);
        Ok(MultiIndex(a))
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// All multi-indices of total order `k` in `dim` dimensions.
    pub fn all_of_order(dim: usize, k: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for a in 0..=k {
            for b in 0..=(k - a) {
                if dim == 2 {
                    if a + b == k {
                        out.push(MultiIndex([a, b, 0]));
                    }
                } else {
                    out.push(MultiIndex([a, b, k - a - b]));
                }
            }
        }
        out
    }
}

impl std::str::FromStr for MultiIndex {
    type Err = NsgError;
    fn from_str(s: &str) -> Result<Self> {
        let orders = s
            .split(',')
            .map(|p| p.trim().parse::<u32>().map_err(|_| NsgError::invalid(format!("bad multi-index `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        MultiIndex::new(&orders)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_mismatch_is_rejected() {
        let g = Grid::new(2, 8).unwrap();
        assert!(SpectralField::to_spectral(&[0.0; 10], g, 1).is_err());
        assert!(SpectralField::from_coeffs(g, 2, vec![Complex64::new(0.0, 0.0); 64]).is_err());
    }

    #[test]
    fn zero_round_trip() {
        let g = Grid::new(2, 8).unwrap();
        let f = SpectralField::zeros(g, 2);
        assert!(f.to_physical().iter().all(|&v| v == 0.0));
        assert!(SpectralField::to_spectral(&f.to_physical(), g, 2).unwrap().is_zero());
    }

    #[test]
    fn pure_mode_round_trip() {
        let g = Grid::new(2, 16).unwrap();
        let mut f = SpectralField::zeros(g, 1);
        f.set_mode(0, &[3, 0, 0], Complex64::new(1.0, 0.0));
        let phys = f.to_physical_complex();
        for (i, v) in phys.iter().enumerate() {
            let x = g.point(i);
            assert!((v - Complex64::from_polar(1.0, 3.0 * x[0])).norm() < 1e-13);
        }
        let back = SpectralField::from_physical_complex(phys, g, 1).unwrap();
        assert!(back.relative_error(&f) < 1e-12);
    }

    #[test]
    fn velocity_requires_divergence_free() {
        let g = Grid::new(2, 8).unwrap();
        let mut f = SpectralField::zeros(g, 2);
        f.set_real_mode(0, &[1, 0, 0], Complex64::new(1.0, 0.0));
        assert!(VelocityField::new(f.clone()).is_err());
        let mut h = SpectralField::zeros(g, 2);
        h.set_real_mode(1, &[1, 0, 0], Complex64::new(1.0, 0.0));
        assert!(VelocityField::new(h).is_ok());
        assert!(VelocityField::new(SpectralField::zeros(g, 1)).is_err());
    }

    #[test]
    fn multi_index_parse() {
        let m: MultiIndex = "1,2".parse().unwrap();
        assert_eq!(m.0, [1, 2, 0]);
        assert_eq!(m.order(), 3);
        assert_eq!(MultiIndex::all_of_order(2, 2).len(), 3);
        assert_eq!(MultiIndex::all_of_order(3, 2).len(), 6);
    }
}
