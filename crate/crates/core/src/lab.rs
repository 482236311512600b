//! Verification harness for the discrete inequalities: an exact combinatorial
//! sum, a Leibniz-type identity checked in an exact function algebra, and
//! measured constants for heat, Gevrey and Bernstein estimates.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{NsgError, Result};
use crate::field::{MultiIndex, SpectralField};
use crate::grid::{norm_l1, norm_sq, Grid};
use crate::init::{random_block_field, random_scalar};
use crate::lp::{build_filter_bank, lp_norm, LPFilterBank, ANNULUS_INNER, ANNULUS_OUTER};
use crate::spectral::derivative;

fn as_string<S: Serializer, T: fmt::Display>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// `Σ_j C(n,j) j^{j-1} (n-j)^{n-j-1}` against `n^{n-1}`, exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactRatio {
    pub n: u64,
    #[serde(serialize_with = "as_string")]
    pub sum: BigInt,
    #[serde(serialize_with = "as_string")]
    pub bound_base: BigInt,
    #[serde(serialize_with = "as_string")]
    pub ratio: BigRational,
}

/// `base^exp` with the convention `0^s = 1`.
fn pow0(base: u64, exp: i64) -> BigInt {
    if base == 0 {
        return BigInt::one();
    }
    num_traits::pow(BigInt::from(base), exp as usize)
}

pub fn kahane_sum(n: u64) -> Result<ExactRatio> {
    if n == 0 {
        return Err(NsgError::invalid("kahane sum needs n >= 1"));
    }
    let mut binom = BigInt::one();
    let mut sum = BigInt::zero();
    for j in 0..=n {
        sum += &binom * pow0(j, j as i64 - 1) * pow0(n - j, (n - j) as i64 - 1);
        binom = binom * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    let bound_base = pow0(n, n as i64 - 1);
    let ratio = BigRational::new(sum.clone(), bound_base.clone());
    Ok(ExactRatio { n, sum, bound_base, ratio })
}

/// `(4n-2) n^{n-2}`, exact (a rational only at `n = 1`).
pub fn kahane_closed_form(n: u64) -> BigRational {
    let base = BigRational::from_integer(BigInt::from(n));
    let power = if n >= 2 { num_traits::pow(base, (n - 2) as usize) } else { base.recip() };
    power * BigRational::from_integer(BigInt::from(4 * n as i64 - 2))
}

pub fn kahane_closed_form_check(n: u64) -> bool {
    match kahane_sum(n) {
        Ok(r) => BigRational::from_integer(r.sum) == kahane_closed_form(n),
        Err(_) => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Trig {
    One,
    Cos,
    Sin,
}

/// `t^m e^{at} T(bt)` with `T ∈ {1, cos, sin}`, `b > 0` unless `T = 1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Atom {
    m: u32,
    a: BigRational,
    b: BigRational,
    trig: Trig,
}

/// Finite sums of `c t^m e^{at} {1, cos(bt), sin(bt)}` with exact rational data.
/// Closed under products and `d/dt`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QuasiPoly {
    terms: BTreeMap<Atom, BigRational>,
}

fn half() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(2))
}

impl QuasiPoly {
    pub fn zero() -> Self {
        QuasiPoly::default()
    }

    pub fn constant(c: BigRational) -> Self {
        let mut q = QuasiPoly::zero();
        q.push(0, BigRational::zero(), BigRational::zero(), Trig::One, c);
        q
    }

    pub fn monomial(m: u32, c: BigRational) -> Self {
        let mut q = QuasiPoly::zero();
        q.push(m, BigRational::zero(), BigRational::zero(), Trig::One, c);
        q
    }

    pub fn exp(a: BigRational) -> Self {
        let mut q = QuasiPoly::zero();
        q.push(0, a, BigRational::zero(), Trig::One, BigRational::one());
        q
    }

    pub fn cos(b: BigRational) -> Self {
        let mut q = QuasiPoly::zero();
        q.push(0, BigRational::zero(), b, Trig::Cos, BigRational::one());
        q
    }

    pub fn sin(b: BigRational) -> Self {
        let mut q = QuasiPoly::zero();
        q.push(0, BigRational::zero(), b, Trig::Sin, BigRational::one());
        q
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn push(&mut self, m: u32, a: BigRational, mut b: BigRational, mut trig: Trig, mut c: BigRational) {
        if c.is_zero() {
            return;
        }
        if trig != Trig::One && b.is_negative() {
            b = -b;
            if trig == Trig::Sin {
                c = -c;
            }
        }
        if b.is_zero() {
            match trig {
                Trig::Sin => return,
                Trig::Cos => trig = Trig::One,
                Trig::One => {}
            }
        }
        if trig == Trig::One {
            b = BigRational::zero();
        }
        let key = Atom { m, a, b, trig };
        let entry = self.terms.entry(key.clone()).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &QuasiPoly) -> QuasiPoly {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.push(k.m, k.a.clone(), k.b.clone(), k.trig, c.clone());
        }
        out
    }

    pub fn scale(&self, s: &BigRational) -> QuasiPoly {
        let mut out = QuasiPoly::zero();
        for (k, c) in &self.terms {
            out.push(k.m, k.a.clone(), k.b.clone(), k.trig, c * s);
        }
        out
    }

    pub fn sub(&self, other: &QuasiPoly) -> QuasiPoly {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn mul(&self, other: &QuasiPoly) -> QuasiPoly {
        let mut out = QuasiPoly::zero();
        for (x, cx) in &self.terms {
            for (y, cy) in &other.terms {
                let m = x.m + y.m;
                let a = &x.a + &y.a;
                let c = cx * cy;
                let (b1, b2) = (&x.b, &y.b);
                let sum = b1 + b2;
                let diff = b1 - b2;
                let h = &c * half();
                match (x.trig, y.trig) {
                    (Trig::One, t) => out.push(m, a, b2.clone(), t, c),
                    (t, Trig::One) => out.push(m, a, b1.clone(), t, c),
                    (Trig::Cos, Trig::Cos) => {
                        out.push(m, a.clone(), diff, Trig::Cos, h.clone());
                        out.push(m, a, sum, Trig::Cos, h);
                    }
                    (Trig::Sin, Trig::Sin) => {
                        out.push(m, a.clone(), diff, Trig::Cos, h.clone());
                        out.push(m, a, sum, Trig::Cos, -h);
                    }
                    (Trig::Sin, Trig::Cos) => {
                        out.push(m, a.clone(), sum, Trig::Sin, h.clone());
                        out.push(m, a, diff, Trig::Sin, h);
                    }
                    (Trig::Cos, Trig::Sin) => {
                        out.push(m, a.clone(), sum, Trig::Sin, h.clone());
                        out.push(m, a, diff, Trig::Sin, -h);
                    }
                }
            }
        }
        out
    }

    /// Multiply by `t^k`.
    pub fn shift(&self, k: u32) -> QuasiPoly {
        let mut out = QuasiPoly::zero();
        for (x, c) in &self.terms {
            out.push(x.m + k, x.a.clone(), x.b.clone(), x.trig, c.clone());
        }
        out
    }

    pub fn derivative(&self) -> QuasiPoly {
        let mut out = QuasiPoly::zero();
        for (x, c) in &self.terms {
            if x.m > 0 {
                out.push(x.m - 1, x.a.clone(), x.b.clone(), x.trig, c * BigInt::from(x.m));
            }
            out.push(x.m, x.a.clone(), x.b.clone(), x.trig, c * &x.a);
            match x.trig {
                Trig::One => {}
                Trig::Cos => out.push(x.m, x.a.clone(), x.b.clone(), Trig::Sin, -(c * &x.b)),
                Trig::Sin => out.push(x.m, x.a.clone(), x.b.clone(), Trig::Cos, c * &x.b),
            }
        }
        out
    }

    pub fn nth_derivative(&self, n: usize) -> QuasiPoly {
        (0..n).fold(self.clone(), |acc, _| acc.derivative())
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|(x, c)| {
                let b = x.b.to_f64().unwrap_or(f64::NAN);
                let trig = match x.trig {
                    Trig::One => 1.0,
                    Trig::Cos => (b * t).cos(),
                    Trig::Sin => (b * t).sin(),
                };
                c.to_f64().unwrap_or(f64::NAN)
                    * t.powi(x.m as i32)
                    * (x.a.to_f64().unwrap_or(f64::NAN) * t).exp()
                    * trig
            })
            .sum()
    }
}

/// Members of the closed test family.
#[derive(Debug, Clone, PartialEq)]
pub enum FuncSpec {
    /// Coefficients `c_0, c_1, ...` of a polynomial of degree at most 6.
    Poly(Vec<BigRational>),
    Exp(BigRational),
    Sin(BigRational),
    Cos(BigRational),
}

fn parse_rational(s: &str) -> Result<BigRational> {
    s.trim().parse::<BigRational>().map_err(|_| NsgError::invalid(format!("bad rational `{s}`")))
}

impl std::str::FromStr for FuncSpec {
    type Err = NsgError;
    /// `poly:1,0,-2`, `exp:1/2`, `sin:3`, `cos:1`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) =
            s.split_once(':').ok_or_else(|| NsgError::invalid(format!("unsupported function spec `{s}`")))?;
        let spec = match kind.trim() {
            "poly" => FuncSpec::Poly(arg.split(',').map(parse_rational).collect::<Result<_>>()?),
            "exp" => FuncSpec::Exp(parse_rational(arg)?),
            "sin" => FuncSpec::Sin(parse_rational(arg)?),
            "cos" => FuncSpec::Cos(parse_rational(arg)?),
            _ => return Err(NsgError::invalid(format!("unsupported function spec `{s}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for FuncSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FuncSpec::Poly(c) => write!(f, "poly:{}", c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")),
            FuncSpec::Exp(c) => write!(f, "exp:{c}"),
            FuncSpec::Sin(b) => write!(f, "sin:{b}"),
            FuncSpec::Cos(b) => write!(f, "cos:{b}"),
        }
    }
}

impl FuncSpec {
    pub fn validate(&self) -> Result<()> {
        if let FuncSpec::Poly(c) = self {
            if c.is_empty() || c.len() > 7 {
                return Err(NsgError::invalid("polynomials must have degree 0..=6"));
            }
        }
        Ok(())
    }

    pub fn to_quasi(&self) -> Result<QuasiPoly> {
        self.validate()?;
        Ok(match self {
            FuncSpec::Poly(c) => c
                .iter()
                .enumerate()
                .fold(QuasiPoly::zero(), |acc, (m, v)| acc.add(&QuasiPoly::monomial(m as u32, v.clone()))),
            FuncSpec::Exp(a) => QuasiPoly::exp(a.clone()),
            FuncSpec::Sin(b) => QuasiPoly::sin(b.clone()),
            FuncSpec::Cos(b) => QuasiPoly::cos(b.clone()),
        })
    }
}

/// Largest order accepted by the identity check.
pub const LEIBNIZ_MAX_ORDER: usize = 8;

fn binom(n: usize, k: usize) -> BigRational {
    let v = (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1));
    BigRational::from_integer(v)
}

/// `∂ₜʲ(tʲ f)`
fn weighted(f: &QuasiPoly, j: usize) -> QuasiPoly {
    f.shift(j as u32).nth_derivative(j)
}

/// Both sides of
/// `∂ₜⁿ[tⁿfg] = Σ_j C(n,j) ∂ʲ(tʲf) ∂ⁿ⁻ʲ(tⁿ⁻ʲg) - n Σ_j C(n-1,j) ∂ʲ(tʲf) ∂ⁿ⁻¹⁻ʲ(tⁿ⁻¹⁻ʲg)`.
pub fn leibniz_sides(n: usize, f: &QuasiPoly, g: &QuasiPoly) -> (QuasiPoly, QuasiPoly) {
    let lhs = f.mul(g).shift(n as u32).nth_derivative(n);
    let fw: Vec<QuasiPoly> = (0..=n).map(|j| weighted(f, j)).collect();
    let gw: Vec<QuasiPoly> = (0..=n).map(|j| weighted(g, j)).collect();
    let mut rhs = QuasiPoly::zero();
    for j in 0..=n {
        rhs = rhs.add(&fw[j].mul(&gw[n - j]).scale(&binom(n, j)));
    }
    if n > 0 {
        let nn = BigRational::from_integer(BigInt::from(n));
        for j in 0..n {
            rhs = rhs.sub(&fw[j].mul(&gw[n - 1 - j]).scale(&(binom(n - 1, j) * &nn)));
        }
    }
    (lhs, rhs)
}

#[derive(Debug, Clone, Serialize)]
pub struct LeibnizCheck {
    pub n: usize,
    pub f: String,
    pub g: String,
    /// `LHS - RHS` vanishes identically in the exact algebra.
    pub symbolic_equal: bool,
    /// `max_t |LHS(t) - RHS(t)|`, both sides evaluated separately in f64.
    pub max_abs_deviation: f64,
    /// `max_t |LHS(t) - RHS(t)| / max(1, |LHS(t)|)`.
    pub max_rel_deviation: f64,
}

/// Sample times `0.1, 0.2, ..., 2.0`.
pub fn leibniz_times() -> Vec<f64> {
    (1..=20).map(|i| i as f64 / 10.0).collect()
}

pub fn leibniz_identity_check(n: usize, f: &FuncSpec, g: &FuncSpec) -> Result<LeibnizCheck> {
    if n > LEIBNIZ_MAX_ORDER {
        return Err(NsgError::invalid(format!("order {n} exceeds {LEIBNIZ_MAX_ORDER}")));
    }
    let (fq, gq) = (f.to_quasi()?, g.to_quasi()?);
    let (lhs, rhs) = leibniz_sides(n, &fq, &gq);
    // The f64 side is assembled from separately evaluated factors so it does
    // not inherit the exact algebra's cancellations.
    let fw: Vec<QuasiPoly> = (0..=n).map(|j| weighted(&fq, j)).collect();
    let gw: Vec<QuasiPoly> = (0..=n).map(|j| weighted(&gq, j)).collect();
    let binom_f = |a: usize, b: usize| binom(a, b).to_f64().unwrap_or(f64::NAN);
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    for t in leibniz_times() {
        let fv: Vec<f64> = fw.iter().map(|q| q.eval(t)).collect();
        let gv: Vec<f64> = gw.iter().map(|q| q.eval(t)).collect();
        let mut r: f64 = (0..=n).map(|j| binom_f(n, j) * fv[j] * gv[n - j]).sum();
        if n > 0 {
            r -= n as f64 * (0..n).map(|j| binom_f(n - 1, j) * fv[j] * gv[n - 1 - j]).sum::<f64>();
        }
        let l = lhs.eval(t);
        let d = (l - r).abs();
        max_abs = max_abs.max(d);
        max_rel = max_rel.max(d / l.abs().max(1.0));
    }
    Ok(LeibnizCheck {
        n,
        f: f.to_string(),
        g: g.to_string(),
        symbolic_equal: lhs.sub(&rhs).is_zero(),
        max_abs_deviation: max_abs,
        max_rel_deviation: max_rel,
    })
}

/// The closed family used by the sweep.
pub fn leibniz_family() -> Vec<FuncSpec> {
    ["poly:1", "poly:0,0,1", "poly:1,-2,0,3,0,0,1", "exp:1", "exp:-1/2", "sin:2", "cos:1", "cos:1/3"]
        .iter()
        .map(|s| s.parse().expect("family member parses"))
        .collect()
}

/// `tⁿ‖e^{√tΛ}Δⁿe^{tΔ}f‖_p / (nⁿ‖f‖_p)` with `0⁰ = 1`.
pub fn heat_gevrey_field_ratio(f: &SpectralField, n: u32, t: f64, p: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(NsgError::invalid("t must be nonnegative"));
    }
    let norm = lp_norm(f, p);
    if norm == 0.0 {
        return Err(NsgError::invalid("heat-Gevrey ratio of a zero field"));
    }
    let rt = t.sqrt();
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let g = f.apply_real_symbol(|k| {
        let k2 = norm_sq(k);
        if n > 0 && (k2 == 0.0 || t == 0.0) {
            return 0.0;
        }
        let log_mag = if n == 0 { 0.0 } else { n as f64 * (t * k2).ln() };
        sign * (log_mag + rt * norm_l1(k) as f64 - t * k2).exp()
    });
    if !g.is_finite() {
        return Err(NsgError::Overflow { shell: crate::grid::norm_l1(&[f.grid().n() as i64 / 2; 3]), a: rt });
    }
    let nn = if n == 0 { 1.0 } else { (n as f64).powi(n as i32) };
    Ok(lp_norm(&g, p) / (nn * norm))
}

/// Is block `j` fully inside the grid and populated?
pub fn block_resolved(bank: &LPFilterBank, j: i32) -> bool {
    let grid = bank.grid();
    bank.is_populated(j) && 2f64.powi(j) * ANNULUS_OUTER <= grid.n() as f64 / 2.0
}

/// Heat-Gevrey ratio on a seeded random field localized to block `j`.
pub fn heat_gevrey_bound_probe(n: u32, j: i32, t: f64, bank: &LPFilterBank, p: f64, seed: u64) -> Result<f64> {
    if n > 4 {
        return Err(NsgError::invalid("heat-Gevrey probe supports n <= 4"));
    }
    if !block_resolved(bank, j) {
        return Err(NsgError::invalid(format!("block {j} is not resolved on this grid")));
    }
    heat_gevrey_field_ratio(&random_block_field(bank, j, seed)?, n, t, p)
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalizationFit {
    pub j: i32,
    pub rate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl LocalizationFit {
    pub fn within(&self) -> bool {
        self.rate >= self.lower * (1.0 - 1e-12) && self.rate <= self.upper * (1.0 + 1e-12)
    }
}

/// Bracket `[(3/4)² 4^j, (8/3)² 4^j]` for decay rates on block `j`.
pub fn localization_bracket(j: i32) -> (f64, f64) {
    let s = 4f64.powi(j);
    (ANNULUS_INNER * ANNULUS_INNER * s, ANNULUS_OUTER * ANNULUS_OUTER * s)
}

/// Least-squares rate of `-ln(‖e^{tΔ}f‖₂/‖f‖₂)` over `t ∈ [0, 2·4^{-j}]`.
pub fn heat_decay_rate(f: &SpectralField, j: i32) -> Result<f64> {
    let base = f.l2_norm();
    if base == 0.0 {
        return Err(NsgError::invalid("decay rate of a zero field"));
    }
    let t_max = 2.0 * 4f64.powi(-j);
    let m = 16;
    let mut xs = Vec::with_capacity(m + 1);
    let mut ys = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let t = t_max * i as f64 / m as f64;
        xs.push(t);
        ys.push(-(crate::spectral::heat_semigroup(f, t)?.l2_norm() / base).ln());
    }
    Ok(crate::diagnostics::linear_fit(&xs, &ys).0)
}

pub fn heat_localization_probe(j: i32, bank: &LPFilterBank, seed: u64) -> Result<LocalizationFit> {
    if !bank.is_populated(j) {
        return Err(NsgError::invalid(format!("block {j} has no lattice points")));
    }
    let f = random_block_field(bank, j, seed)?;
    let rate = heat_decay_rate(&f, j)?;
    let (lower, upper) = localization_bracket(j);
    Ok(LocalizationFit { j, rate, lower, upper })
}

#[derive(Debug, Clone, Serialize)]
pub struct BernsteinMeasure {
    pub j: i32,
    pub p: f64,
    pub order: u32,
    /// `max_{|α|=k} ‖∂^αΔ_j f‖_p / (2^{jk}‖Δ_j f‖_p)`
    pub upper: f64,
    /// `‖|∇^k Δ_j f|‖_p / (2^{jk}‖Δ_j f‖_p)` with the full derivative tensor.
    pub lower: f64,
}

/// Ordered index tuples of length `k` over `dim` axes, as multi-indices.
fn ordered_tuples(dim: usize, k: u32) -> Vec<MultiIndex> {
    let mut out = vec![MultiIndex::default()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|m| {
                (0..dim).map(move |ax| {
                    let mut a = m;
                    a.0[ax] += 1;
                    a
                })
            })
            .collect();
    }
    out
}

pub fn bernstein_probe(bank: &LPFilterBank, j: i32, p: f64, order: u32, seed: u64) -> Result<BernsteinMeasure> {
    let f = random_block_field(bank, j, seed)?;
    let base = lp_norm(&f, p);
    if base == 0.0 {
        return Err(NsgError::invalid(format!("block {j} has no lattice points")));
    }
    let dim = bank.grid().dim();
    let scale = 2f64.powi(j * order as i32) * base;
    let upper = MultiIndex::all_of_order(dim, order)
        .into_iter()
        .map(|a| derivative(&f, a).map(|d| lp_norm(&d, p)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max)
        / scale;
    let tensor = ordered_tuples(dim, order).into_iter().map(|a| derivative(&f, a)).collect::<Result<Vec<_>>>()?;
    let lower = lp_norm(&SpectralField::stack(&tensor)?, p) / scale;
    Ok(BernsteinMeasure { j, p, order, upper, lower })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// One JSON verification record.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    pub lemma_id: String,
    pub range_tested: String,
    pub status: Status,
    pub measured_constant: f64,
    pub worst_case: String,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

pub fn kahane_report(n_max: u64) -> Result<LemmaReport> {
    let rows: Vec<ExactRatio> = (1..=n_max).into_par_iter().map(kahane_sum).collect::<Result<_>>()?;
    let closed = (1..=n_max).into_par_iter().all(kahane_closed_form_check);
    let four = BigRational::from_integer(BigInt::from(4));
    let increasing = rows.windows(2).all(|w| w[0].ratio < w[1].ratio);
    let below = rows.iter().all(|r| r.ratio < four);
    let last = rows.last().ok_or_else(|| NsgError::invalid("n_max must be >= 1"))?;
    Ok(LemmaReport {
        lemma_id: "kahane_sum".into(),
        range_tested: format!("1 <= n <= {n_max}"),
        status: Status::from_bool(closed && increasing && below),
        measured_constant: last.ratio.to_f64().unwrap_or(f64::NAN),
        worst_case: format!(
            "n={} ratio={} closed_form={} increasing={} below_4={}",
            last.n, last.ratio, closed, increasing, below
        ),
    })
}

/// Ratios `(n, sum/n^{n-1})` as f64, for plotting.
pub fn kahane_table(n_max: u64) -> Result<Vec<(u64, f64)>> {
    (1..=n_max).map(|n| kahane_sum(n).map(|r| (n, r.ratio.to_f64().unwrap_or(f64::NAN)))).collect()
}

pub fn leibniz_report() -> Result<LemmaReport> {
    let fam = leibniz_family();
    let mut cases = Vec::new();
    for f in &fam {
        for g in &fam {
            for n in 0..=LEIBNIZ_MAX_ORDER {
                cases.push((n, f.clone(), g.clone()));
            }
        }
    }
    let checks: Vec<LeibnizCheck> =
        cases.par_iter().map(|(n, f, g)| leibniz_identity_check(*n, f, g)).collect::<Result<_>>()?;
    let worst =
        checks.iter().max_by(|a, b| a.max_rel_deviation.total_cmp(&b.max_rel_deviation)).expect("nonempty family");
    let ok = checks.iter().all(|c| c.symbolic_equal && c.max_rel_deviation < 1e-9);
    Ok(LemmaReport {
        lemma_id: "leibniz_identity".into(),
        range_tested: format!("n <= {LEIBNIZ_MAX_ORDER}, {} x {} family pairs, t in [0.1, 2]", fam.len(), fam.len()),
        status: Status::from_bool(ok),
        measured_constant: worst.max_rel_deviation,
        worst_case: format!("n={} f={} g={} abs={:e}", worst.n, worst.f, worst.g, worst.max_abs_deviation),
    })
}

/// Per-order constants `C_n = max_{j,t} ratio^{1/(n+1)}` of the heat-Gevrey sweep.
pub fn heat_gevrey_constants(bank: &LPFilterBank, p: f64, seeds: &[u64]) -> Result<Vec<(u32, f64, String)>> {
    let js: Vec<i32> = (0..=4).filter(|&j| block_resolved(bank, j)).collect();
    let times: Vec<f64> = (0..=8).map(|e| 2f64.powi(-e)).collect();
    (0..=3u32)
        .map(|n| {
            let mut best = (0.0, String::new());
            for &j in &js {
                for &t in &times {
                    for &seed in seeds {
                        let r = heat_gevrey_bound_probe(n, j, t, bank, p, seed)?;
                        let c = r.powf(1.0 / (n + 1) as f64);
                        if c > best.0 {
                            best = (c, format!("n={n} j={j} t={t} seed={seed}"));
                        }
                    }
                }
            }
            Ok((n, best.0, best.1))
        })
        .collect()
}

pub fn heat_gevrey_report(grid: Grid, p: f64) -> Result<LemmaReport> {
    let bank = build_filter_bank(&grid);
    let consts = heat_gevrey_constants(&bank, p, &[1, 2, 3])?;
    let max = consts.iter().map(|c| c.1).fold(0.0, f64::max);
    let min = consts.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let worst = consts.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    Ok(LemmaReport {
        lemma_id: "heat_gevrey_bound".into(),
        range_tested: format!("n in 0..=3, resolved j in 0..=4, t = 2^-8..1, p = {p}, N = {}", grid.n()),
        status: Status::from_bool(max.is_finite() && max / min <= 2.0),
        measured_constant: max,
        worst_case: format!("{} (C_n spread {:.3})", worst.2, max / min),
    })
}

pub fn heat_localization_report(grid: Grid) -> Result<LemmaReport> {
    let bank = build_filter_bank(&grid);
    let fits: Vec<LocalizationFit> =
        bank.populated_blocks().into_iter().map(|j| heat_localization_probe(j, &bank, 17)).collect::<Result<_>>()?;
    let ok = fits.iter().all(LocalizationFit::within);
    // Position of the rate inside the bracket, 0 = lower edge, 1 = upper edge.
    let worst = fits
        .iter()
        .map(|f| (f, (f.rate / f.lower).ln() / (f.upper / f.lower).ln()))
        .max_by(|a, b| (a.1 - 0.5).abs().total_cmp(&(b.1 - 0.5).abs()))
        .expect("populated blocks");
    Ok(LemmaReport {
        lemma_id: "heat_localization".into(),
        range_tested: format!("populated j in {:?}, N = {}", bank.populated_blocks(), grid.n()),
        status: Status::from_bool(ok),
        measured_constant: worst.0.rate / 4f64.powi(worst.0.j),
        worst_case: format!(
            "j={} rate={:.4} bracket=[{:.4}, {:.4}]",
            worst.0.j, worst.0.rate, worst.0.lower, worst.0.upper
        ),
    })
}

/// Bernstein constants over `|α| <= 3`, `p ∈ {2, 4}` and the resolved blocks.
pub fn bernstein_report(grid: Grid) -> Result<LemmaReport> {
    let bank = build_filter_bank(&grid);
    let js: Vec<i32> = bank.populated_blocks().into_iter().filter(|&j| block_resolved(&bank, j)).collect();
    let mut cases = Vec::new();
    for &j in &js {
        for p in [2.0, 4.0] {
            for k in 0..=3 {
                cases.push((j, p, k));
            }
        }
    }
    let ms: Vec<BernsteinMeasure> =
        cases.par_iter().map(|&(j, p, k)| bernstein_probe(&bank, j, p, k, 23)).collect::<Result<_>>()?;
    let limit = ANNULUS_OUTER * 1.1;
    let c_upper = ms.iter().map(|m| m.upper.powf(1.0 / (m.order + 1) as f64)).fold(0.0, f64::max);
    let lower_ok = ms.iter().all(|m| m.lower >= ANNULUS_INNER.powi(m.order as i32) / 1.1);
    let worst_lower = ms
        .iter()
        .min_by(|a, b| {
            (a.lower / ANNULUS_INNER.powi(a.order as i32)).total_cmp(&(b.lower / ANNULUS_INNER.powi(b.order as i32)))
        })
        .unwrap();
    Ok(LemmaReport {
        lemma_id: "bernstein".into(),
        range_tested: format!("|alpha| <= 3, p in {{2, 4}}, j in {js:?}, d = {}, N = {}", grid.dim(), grid.n()),
        status: Status::from_bool(c_upper <= limit && lower_ok),
        measured_constant: c_upper,
        worst_case: format!(
            "upper C={c_upper:.4} (limit {limit:.4}); lowest reverse ratio {:.4} at j={} p={} k={}",
            worst_lower.lower, worst_lower.j, worst_lower.p, worst_lower.order
        ),
    })
}

/// Partition-of-unity defects and block reconstruction on several grids.
pub fn lp_report(grids: &[Grid]) -> Result<LemmaReport> {
    let mut worst = (0.0f64, String::new());
    for &g in grids {
        let bank = build_filter_bank(&g);
        let f = random_scalar(g, 5, g.n() as f64);
        let rec = bank.decompose(&f)?.reconstruct().expect("blocks exist");
        let rec_err = rec.relative_error(&f.without_mean());
        for (what, v) in [
            ("partition", bank.partition_defect()),
            ("low partition", bank.low_partition_defect()),
            ("reconstruction", rec_err),
        ] {
            if v > worst.0 || worst.1.is_empty() {
                worst = (v, format!("{what} d={} N={}", g.dim(), g.n()));
            }
        }
    }
    Ok(LemmaReport {
        lemma_id: "lp_partition".into(),
        range_tested: grids.iter().map(|g| format!("{}d/N={}", g.dim(), g.n())).collect::<Vec<_>>().join(", "),
        status: Status::from_bool(worst.0 < 1e-10),
        measured_constant: worst.0,
        worst_case: worst.1,
    })
}

/// Kernel mass, heat-Gevrey `L^p` bound, sector operator norms and the
/// product-operator sector identity.
pub fn gevrey_reports() -> Result<Vec<LemmaReport>> {
    use crate::gevrey::*;
    let mut out = Vec::new();

    let masses: Vec<(f64, f64)> =
        [0.01, 0.1, 1.0].iter().map(|&a| poisson_kernel_l1_mass(8192, a).map(|m| (a, m * m))).collect::<Result<_>>()?;
    let (a_w, m_w) = masses.iter().cloned().max_by(|x, y| x.1.total_cmp(&y.1)).unwrap();
    out.push(LemmaReport {
        lemma_id: "gevrey_kernel_mass".into(),
        range_tested: "a in {0.01, 0.1, 1}, d = 2 (tensor product of 1D kernels, 8192 points)".into(),
        status: Status::from_bool(m_w <= 1.01),
        measured_constant: m_w,
        worst_case: format!("a={a_w} mass={m_w:.6}"),
    });

    let g = Grid::new(2, 32)?;
    let bound = 1.1 * (g.dim() as f64 / 2.0).exp();
    let mut worst = (0.0f64, String::new());
    for p in [2.0, 4.0] {
        for seed in 0..3u64 {
            let f = random_scalar(g, 100 + seed, 10.0);
            for t in [0.01, 0.1, 1.0, 10.0] {
                let c = heat_gevrey_ratio(&f, t, p)?;
                if c > worst.0 {
                    worst = (c, format!("p={p} t={t} seed={}", 100 + seed));
                }
            }
        }
    }
    out.push(LemmaReport {
        lemma_id: "heat_gevrey_lp_bound".into(),
        range_tested: "t in {0.01, 0.1, 1, 10}, p in {2, 4}, 2D N=32 band-limited".into(),
        status: Status::from_bool(worst.0 <= bound),
        measured_constant: worst.0,
        worst_case: format!("{} (uniform bound {bound:.4})", worst.1),
    });

    let f = random_scalar(g, 7, 10.0);
    let mut c2 = 0.0f64;
    let mut c4 = 0.0f64;
    let n2 = lp_norm(&f, 2.0);
    let n4 = lp_norm(&f, 4.0);
    for t in [0.05, 0.2, 1.0] {
        for a in sign_vectors(2) {
            for b in sign_vectors(2) {
                let s = SectorSign::new(&a[..2], &b[..2])?;
                let z = sector_operator(&f, t, &s)?;
                c2 = c2.max(lp_norm(&z, 2.0) / n2);
                c4 = c4.max(lp_norm(&z, 4.0) / n4);
            }
        }
    }
    out.push(LemmaReport {
        lemma_id: "sector_operator_norm".into(),
        range_tested: "all sign pairs, t in {0.05, 0.2, 1}, p in {2, 4}, 2D N=32".into(),
        status: Status::from_bool(c2 <= 1.01 && c4 < 3.0),
        measured_constant: c4,
        worst_case: format!("p=2 C={c2:.4}, p=4 C={c4:.4}"),
    });

    let mut worst = 0.0f64;
    for (i, t) in [0.0, 0.05, 0.2].into_iter().enumerate() {
        let f = random_scalar(g, 40 + i as u64, 10.0);
        let h = random_scalar(g, 50 + i as u64, 10.0);
        let direct = product_operator(&f, &h, t, crate::spectral::TWO_THIRDS)?;
        let sum = product_operator_decomposed(&f, &h, t, crate::spectral::TWO_THIRDS)?;
        worst = worst.max(sum.relative_error(&direct));
    }
    out.push(LemmaReport {
        lemma_id: "product_operator_sectors".into(),
        range_tested: "t in {0, 0.05, 0.2}, 2D N=32, 64 sector terms".into(),
        status: Status::from_bool(worst < 1e-8),
        measured_constant: worst,
        worst_case: format!("max relative L2 error {worst:e}"),
    });
    Ok(out)
}
