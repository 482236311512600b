//! Littlewood-Paley decomposition on the periodic lattice and the Besov-type
//! norms built from it.
//!
//! The dyadic profile is `φ̂(ξ) = ψ(|ξ|) - ψ(|ξ|/2)` for a smooth ramp `ψ` that
//! is 0 below 3/4 and 1 above 1, so `φ̂` lives in the annulus `[3/4, 2]` and the
//! dyadic sum telescopes to exactly one on every nonzero lattice point.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{NsgError, Result};
use crate::field::SpectralField;
use crate::grid::{norm_sq, Grid};
use crate::spectral::dealiased_product;

pub const ANNULUS_INNER: f64 = 0.75;
pub const ANNULUS_OUTER: f64 = 8.0 / 3.0;

/// Lebesgue / sequence exponent with an explicit infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    pub fn value(&self) -> f64 {
        match self {
            Exponent::Finite(v) => *v,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    /// `ℓ^q` (or `L^q` with unit weights) aggregation of nonnegative terms.
    pub fn aggregate(&self, terms: impl IntoIterator<Item = f64>) -> f64 {
        match *self {
            Exponent::Infinity => terms.into_iter().fold(0.0, f64::max),
            Exponent::Finite(q) => {
                let s: f64 = terms.into_iter().map(|v| v.powf(q)).sum();
                s.powf(1.0 / q)
            }
        }
    }
}

impl std::str::FromStr for Exponent {
    type Err = NsgError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
            other => {
                other.parse::<f64>().map(Exponent::Finite).map_err(|_| NsgError::invalid(format!("bad exponent `{s}`")))
            }
        }
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::Finite(v) => write!(f, "{v}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(v) => s.serialize_f64(*v),
            Exponent::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Exponent::Finite(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Indices `(s, p, q, r)` of `Ḃ^s_{p,q}` and of the time-Besov space `L̃^r_t Ḃ^s_{p,q}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormSpec {
    pub s: f64,
    pub p: f64,
    pub q: Exponent,
    pub r: Exponent,
}

impl NormSpec {
    pub fn new(s: f64, p: f64, q: Exponent, r: Exponent) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(NsgError::invalid(format!("p must lie in (1, inf), got {p}")));
        }
        for (name, e) in [("q", q), ("r", r)] {
            if let Exponent::Finite(v) = e {
                if !(v >= 1.0 && v.is_finite()) {
                    return Err(NsgError::invalid(format!("{name} must lie in [1, inf], got {v}")));
                }
            }
        }
        Ok(NormSpec { s, p, q, r })
    }

    pub fn besov(s: f64, p: f64, q: Exponent) -> Result<Self> {
        Self::new(s, p, q, Exponent::Infinity)
    }

    /// The critical space `Ḃ^{3/p-1}_{p,q}`.
    pub fn critical(p: f64, q: Exponent) -> Result<Self> {
        Self::besov(3.0 / p - 1.0, p, q)
    }
}

/// Exponents of the two constituents of `E_{p,q}(T)`:
/// `L̃^∞_t Ḃ^{3/p-1}_{p,q}` and `L̃^{2p/(p-1)}_t Ḃ^{2/p}_{p,q}`.
pub fn epq_specs(p: f64, q: Exponent) -> Result<(NormSpec, NormSpec)> {
    let first = NormSpec::new(3.0 / p - 1.0, p, q, Exponent::Infinity)?;
    let second = NormSpec::new(2.0 / p, p, q, Exponent::Finite(2.0 * p / (p - 1.0)))?;
    Ok((first, second))
}

/// Smooth nondecreasing ramp: 0 for `r <= 3/4`, 1 for `r >= 1`.
pub fn ramp(r: f64) -> f64 {
    let x = (r - ANNULUS_INNER) / (1.0 - ANNULUS_INNER);
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let g = |y: f64| (-1.0 / y).exp();
        g(x) / (g(x) + g(1.0 - x))
    }
}

/// Radial dyadic profile `φ̂`.
pub fn phi_hat(r: f64) -> f64 {
    ramp(r) - ramp(r / 2.0)
}

/// Radial low-frequency profile `χ = 1 - Σ_{j>=0} φ̂(2^{-j}·) = 1 - ψ`.
pub fn chi(r: f64) -> f64 {
    1.0 - ramp(r)
}

/// Sampled partition of unity on a grid.
#[derive(Debug, Clone)]
pub struct LPFilterBank {
    grid: Grid,
    j_min: i32,
    j_max: i32,
    phi: Vec<Vec<f64>>,
    chi: Vec<f64>,
}

/// Build the filter bank with `j_min = -2` and `j_max = ceil(log2 max|ξ|) + 1`.
pub fn build_filter_bank(grid: &Grid) -> LPFilterBank {
    let j_min = -2;
    let j_max = grid.max_wavenumber().log2().ceil() as i32 + 1;
    let radii: Vec<f64> = grid.wavevectors().map(|k| norm_sq(&k).sqrt()).collect();
    let phi = (j_min..=j_max)
        .map(|j| {
            let scale = 2f64.powi(-j);
            radii.iter().map(|&r| phi_hat(scale * r)).collect()
        })
        .collect();
    let chi = radii.iter().map(|&r| chi(r)).collect();
    LPFilterBank { grid: *grid, j_min, j_max, phi, chi }
}

impl LPFilterBank {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn js(&self) -> impl Iterator<Item = i32> {
        self.j_min..=self.j_max
    }

    /// Samples of `φ̂(2^{-j}ξ)` in flat lattice order.
    pub fn phi_samples(&self, j: i32) -> Result<&[f64]> {
        self.check_j(j)?;
        Ok(&self.phi[(j - self.j_min) as usize])
    }

    pub fn chi_samples(&self) -> &[f64] {
        &self.chi
    }

    /// Whether block `j` has any lattice point in its support.
    pub fn is_populated(&self, j: i32) -> bool {
        self.phi_samples(j).map(|s| s.iter().any(|&v| v > 0.0)).unwrap_or(false)
    }

    /// Blocks with nonempty support on the lattice.
    pub fn populated_blocks(&self) -> Vec<i32> {
        self.js().filter(|&j| self.is_populated(j)).collect()
    }

    fn check_j(&self, j: i32) -> Result<()> {
        if j < self.j_min || j > self.j_max {
            Err(NsgError::invalid(format!("block {j} outside bank range [{}, {}]", self.j_min, self.j_max)))
        } else {
            Ok(())
        }
    }

    fn check_grid(&self, f: &SpectralField) -> Result<()> {
        if *f.grid() != self.grid {
            Err(NsgError::invalid("field grid differs from filter-bank grid"))
        } else {
            Ok(())
        }
    }

    /// Max over nonzero lattice points of `|Σ_j φ̂(2^{-j}ξ) - 1|`.
    pub fn partition_defect(&self) -> f64 {
        (1..self.grid.len())
            .map(|flat| {
                let s: f64 = self.phi.iter().map(|row| row[flat]).sum();
                (s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Max over the lattice of `|χ(ξ) + Σ_{j>=0} φ̂(2^{-j}ξ) - 1|`.
    pub fn low_partition_defect(&self) -> f64 {
        (0..self.grid.len())
            .map(|flat| {
                let s: f64 = self.js().filter(|&j| j >= 0).map(|j| self.phi[(j - self.j_min) as usize][flat]).sum();
                (self.chi[flat] + s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `Δ_j f`
    pub fn dyadic_block(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        self.check_grid(f)?;
        Ok(f.apply_table(self.phi_samples(j)?))
    }

    /// `S_j f = Σ_{j_min <= k <= j-1} Δ_k f` (mean mode excluded), for `j_min <= j <= j_max + 1`.
    pub fn lowpass(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        self.check_grid(f)?;
        if j < self.j_min || j > self.j_max + 1 {
            return Err(NsgError::invalid(format!("lowpass index {j} outside [{}, {}]", self.j_min, self.j_max + 1)));
        }
        let mut table = vec![0.0; self.grid.len()];
        for k in self.j_min..j {
            for (t, v) in table.iter_mut().zip(&self.phi[(k - self.j_min) as usize]) {
                *t += v;
            }
        }
        Ok(f.apply_table(&table))
    }

    /// Every block `Δ_j f`, in increasing `j`.
    pub fn decompose(&self, f: &SpectralField) -> Result<DyadicDecomposition> {
        self.check_grid(f)?;
        let blocks = self.js().map(|j| (j, f.apply_table(&self.phi[(j - self.j_min) as usize]))).collect();
        Ok(DyadicDecomposition { blocks })
    }

    /// `‖Δ_j f‖_{L^p}` for every block.
    pub fn block_norms(&self, f: &SpectralField, p: f64) -> Result<Vec<(i32, f64)>> {
        self.check_grid(f)?;
        Ok(self
            .js()
            .map(|j| {
                let row = &self.phi[(j - self.j_min) as usize];
                let v = if row.iter().all(|&x| x == 0.0) { 0.0 } else { lp_norm(&f.apply_table(row), p) };
                (j, v)
            })
            .collect())
    }
}

/// The blocks `Δ_j f` of one field.
#[derive(Debug, Clone)]
pub struct DyadicDecomposition {
    pub blocks: Vec<(i32, SpectralField)>,
}

impl DyadicDecomposition {
    pub fn reconstruct(&self) -> Option<SpectralField> {
        let mut iter = self.blocks.iter();
        let (_, first) = iter.next()?;
        Some(iter.fold(first.clone(), |acc, (_, b)| acc.add(b)))
    }
}

/// `‖f‖_{L^p}` of `|f(x)|` (Euclidean over components) by uniform grid quadrature.
/// For `p = 2` the discrete Parseval identity gives the same sum exactly.
pub fn lp_norm(f: &SpectralField, p: f64) -> f64 {
    if p == 2.0 {
        return f.l2_norm();
    }
    let grid = f.grid();
    let n = grid.len();
    let phys = f.to_physical_complex();
    let mut sum = 0.0;
    for i in 0..n {
        let mag2: f64 = (0..f.components()).map(|c| phys[c * n + i].norm_sqr()).sum();
        sum += mag2.powf(p / 2.0);
    }
    (sum * grid.cell_volume()).powf(1.0 / p)
}

/// Serialized norm record.
#[derive(Debug, Clone, Serialize)]
pub struct NormReport {
    pub norm_kind: String,
    pub s: f64,
    pub p: f64,
    pub q: Exponent,
    pub r: Exponent,
    #[serde(rename = "T")]
    pub t_final: Option<f64>,
    pub value: f64,
    pub per_block: Vec<(i32, f64)>,
}

impl NormReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("norm report serializes")
    }
}

fn weighted_blocks(per_block: &[(i32, f64)], s: f64) -> Vec<(i32, f64)> {
    per_block.iter().map(|&(j, v)| (j, 2f64.powf(j as f64 * s) * v)).collect()
}

/// `‖f‖_{Ḃ^s_{p,q}} = ‖(2^{js}‖Δ_j f‖_{L^p})_j‖_{ℓ^q}`.
pub fn besov_norm(f: &SpectralField, spec: &NormSpec, bank: &LPFilterBank) -> Result<f64> {
    Ok(besov_report(f, spec, bank)?.value)
}

pub fn besov_report(f: &SpectralField, spec: &NormSpec, bank: &LPFilterBank) -> Result<NormReport> {
    let per_block = weighted_blocks(&bank.block_norms(f, spec.p)?, spec.s);
    let value = spec.q.aggregate(per_block.iter().map(|b| b.1));
    Ok(NormReport {
        norm_kind: "besov".into(),
        s: spec.s,
        p: spec.p,
        q: spec.q,
        r: Exponent::Infinity,
        t_final: None,
        value,
        per_block,
    })
}

/// Block norms `‖Δ_j f(t_i)‖_{L^p}` of a time series, computed once and
/// aggregated for any `(s, q, r)`.
#[derive(Debug, Clone)]
pub struct BlockSeries {
    pub times: Vec<f64>,
    pub js: Vec<i32>,
    /// `values[i][b]`: sample `i`, block `js[b]`.
    pub values: Vec<Vec<f64>>,
    pub p: f64,
}

impl BlockSeries {
    pub fn new(series: &[(f64, SpectralField)], p: f64, bank: &LPFilterBank) -> Result<Self> {
        use rayon::prelude::*;
        check_times(series.iter().map(|s| s.0))?;
        let js: Vec<i32> = bank.js().collect();
        let values = series
            .par_iter()
            .map(|(_, f)| bank.block_norms(f, p).map(|b| b.into_iter().map(|x| x.1).collect()))
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(BlockSeries { times: series.iter().map(|s| s.0).collect(), js, values, p })
    }

    pub fn from_values(times: Vec<f64>, js: Vec<i32>, values: Vec<Vec<f64>>, p: f64) -> Result<Self> {
        check_times(times.iter().copied())?;
        Ok(BlockSeries { times, js, values, p })
    }

    /// Chemin-Lerner norm: time `L^r` per block inside, weighted `ℓ^q` outside.
    pub fn aggregate(&self, s: f64, q: Exponent, r: Exponent) -> Result<(f64, Vec<(i32, f64)>)> {
        if !r.is_infinite() && self.times.len() < 2 {
            return Err(NsgError::invalid("finite time exponent needs at least two samples"));
        }
        let per_block: Vec<(i32, f64)> = self
            .js
            .iter()
            .enumerate()
            .map(|(b, &j)| {
                let col: Vec<f64> = self.values.iter().map(|row| row[b]).collect();
                (j, 2f64.powf(j as f64 * s) * time_norm(&self.times, &col, r))
            })
            .collect();
        let value = q.aggregate(per_block.iter().map(|b| b.1));
        Ok((value, per_block))
    }

    /// Same series with every other sample dropped (endpoints kept).
    pub fn coarsened(&self) -> BlockSeries {
        let last = self.times.len().saturating_sub(1);
        let keep: Vec<usize> = (0..self.times.len()).filter(|&i| i % 2 == 0 || i == last).collect();
        BlockSeries {
            times: keep.iter().map(|&i| self.times[i]).collect(),
            js: self.js.clone(),
            values: keep.iter().map(|&i| self.values[i].clone()).collect(),
            p: self.p,
        }
    }

    pub fn restrict(&self, t_final: f64) -> BlockSeries {
        let keep: Vec<usize> = (0..self.times.len()).filter(|&i| self.times[i] <= t_final * (1.0 + 1e-12)).collect();
        BlockSeries {
            times: keep.iter().map(|&i| self.times[i]).collect(),
            js: self.js.clone(),
            values: keep.iter().map(|&i| self.values[i].clone()).collect(),
            p: self.p,
        }
    }
}

fn check_times(times: impl Iterator<Item = f64>) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    let mut any = false;
    for t in times {
        if !(t > prev) {
            return Err(NsgError::invalid("time stamps must be strictly increasing"));
        }
        prev = t;
        any = true;
    }
    if !any {
        return Err(NsgError::invalid("empty time series"));
    }
    Ok(())
}

/// `L^r` over time by the trapezoid rule (supremum for `r = ∞`).
pub fn time_norm(times: &[f64], values: &[f64], r: Exponent) -> f64 {
    match r {
        Exponent::Infinity => values.iter().copied().fold(0.0, f64::max),
        Exponent::Finite(r) => {
            let integral: f64 = times
                .windows(2)
                .zip(values.windows(2))
                .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0].powf(r) + v[1].powf(r)))
                .sum();
            integral.powf(1.0 / r)
        }
    }
}

/// `‖f‖_{L̃^r_t Ḃ^s_{p,q}}` of a sampled trajectory.
pub fn time_besov_norm(series: &[(f64, SpectralField)], spec: &NormSpec, bank: &LPFilterBank) -> Result<f64> {
    Ok(time_besov_report(series, spec, bank)?.value)
}

pub fn time_besov_report(series: &[(f64, SpectralField)], spec: &NormSpec, bank: &LPFilterBank) -> Result<NormReport> {
    if !spec.r.is_infinite() && series.len() < 2 {
        return Err(NsgError::invalid("finite time exponent needs at least two samples"));
    }
    let bs = BlockSeries::new(series, spec.p, bank)?;
    let (value, per_block) = bs.aggregate(spec.s, spec.q, spec.r)?;
    Ok(NormReport {
        norm_kind: "time_besov".into(),
        s: spec.s,
        p: spec.p,
        q: spec.q,
        r: spec.r,
        t_final: bs.times.last().copied(),
        value,
        per_block,
    })
}

/// The two constituents of `E_{p,q}(T)` and their sum.
#[derive(Debug, Clone, Serialize)]
pub struct EpqNorm {
    pub sup_part: NormReport,
    pub integral_part: NormReport,
    pub value: f64,
}

pub fn epq_from_blocks(bs: &BlockSeries, q: Exponent) -> Result<EpqNorm> {
    let (a, b) = epq_specs(bs.p, q)?;
    let (va, pa) = bs.aggregate(a.s, a.q, a.r)?;
    let (vb, pb) = bs.aggregate(b.s, b.q, b.r)?;
    let t_final = bs.times.last().copied();
    let mk = |spec: NormSpec, value, per_block| NormReport {
        norm_kind: "time_besov".into(),
        s: spec.s,
        p: spec.p,
        q: spec.q,
        r: spec.r,
        t_final,
        value,
        per_block,
    };
    Ok(EpqNorm { sup_part: mk(a, va, pa), integral_part: mk(b, vb, pb), value: va + vb })
}

/// `‖f‖_{E_{p,q}(T)}` over the samples with `t <= T`.
pub fn epq_norm(
    series: &[(f64, SpectralField)],
    p: f64,
    q: Exponent,
    t_final: f64,
    bank: &LPFilterBank,
) -> Result<f64> {
    Ok(epq_report(series, p, q, t_final, bank)?.value)
}

pub fn epq_report(
    series: &[(f64, SpectralField)],
    p: f64,
    q: Exponent,
    t_final: f64,
    bank: &LPFilterBank,
) -> Result<EpqNorm> {
    let window: Vec<(f64, SpectralField)> =
        series.iter().filter(|(t, _)| *t <= t_final * (1.0 + 1e-12)).cloned().collect();
    if window.len() < 2 {
        return Err(NsgError::invalid("E_{p,q} norm needs at least two samples in [0, T]"));
    }
    epq_from_blocks(&BlockSeries::new(&window, p, bank)?, q)
}

/// Relative change of the `E_{p,q}` value when the sampling step is doubled.
pub fn epq_halving_defect(bs: &BlockSeries, q: Exponent) -> Result<f64> {
    let fine = epq_from_blocks(bs, q)?.value;
    let coarse = epq_from_blocks(&bs.coarsened(), q)?.value;
    Ok(if fine == 0.0 { 0.0 } else { (fine - coarse).abs() / fine })
}

/// Bony decomposition `fg = T_f g + T_g f + R(f, g)`.
#[derive(Debug, Clone)]
pub struct Paraproduct {
    pub t_fg: SpectralField,
    pub t_gf: SpectralField,
    pub remainder: SpectralField,
}

impl Paraproduct {
    pub fn sum(&self) -> SpectralField {
        self.t_fg.add(&self.t_gf).add(&self.remainder)
    }
}

/// Paraproduct of two scalar fields with dealiased block products.
///
/// The homogeneous blocks do not see the mean mode, so the pieces sum to the
/// product of the mean-free parts of `f` and `g`.
pub fn paraproduct(f: &SpectralField, g: &SpectralField, bank: &LPFilterBank, fraction: f64) -> Result<Paraproduct> {
    f.check_same_shape(g)?;
    bank.check_grid(f)?;
    if f.components() != 1 {
        return Err(NsgError::invalid("paraproduct expects scalar fields"));
    }
    let fd = bank.decompose(f)?;
    let gd = bank.decompose(g)?;
    let nb = fd.blocks.len();
    let zero = SpectralField::zeros(*f.grid(), 1);

    // lowpass[i] = Σ_{b < i-1} blocks[b], i.e. S_{j-1} for block index i.
    let lowpass = |d: &DyadicDecomposition, i: usize| -> SpectralField {
        d.blocks.iter().take(i.saturating_sub(1)).fold(zero.clone(), |acc, (_, b)| acc.add(b))
    };

    let mut t_fg = zero.clone();
    let mut t_gf = zero.clone();
    let mut remainder = zero.clone();
    for i in 0..nb {
        let fi = &fd.blocks[i].1;
        let gi = &gd.blocks[i].1;
        if !gi.is_zero() {
            let sf = lowpass(&fd, i);
            if !sf.is_zero() {
                t_fg = t_fg.add(&dealiased_product(&sf, gi, fraction)?);
            }
        }
        if !fi.is_zero() {
            let sg = lowpass(&gd, i);
            if !sg.is_zero() {
                t_gf = t_gf.add(&dealiased_product(&sg, fi, fraction)?);
            }
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(nb - 1);
            let near = gd.blocks[lo..=hi].iter().fold(zero.clone(), |acc, (_, b)| acc.add(b));
            if !near.is_zero() {
                remainder = remainder.add(&dealiased_product(fi, &near, fraction)?);
            }
        }
    }
    Ok(Paraproduct { t_fg, t_gf, remainder })
}
