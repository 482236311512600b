use std::f64::consts::PI;

use nsg_core::field::SpectralField;
use nsg_core::grid::Grid;
use nsg_core::init::random_scalar;
use nsg_core::lp::*;
use nsg_core::spectral::{dealiased_product, heat_semigroup, TWO_THIRDS};
use num_complex::Complex64;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn mode_field(grid: Grid, k: [i64; 3]) -> SpectralField {
    let mut f = SpectralField::zeros(grid, 1);
    f.set_real_mode(0, &k, c(0.5));
    f
}

#[test]
fn partition_of_unity_on_all_grids() {
    for dim in [2, 3] {
        for n in [16, 32, 64] {
            let bank = build_filter_bank(&Grid::new(dim, n).unwrap());
            assert!(bank.partition_defect() < 1e-10, "d={dim} N={n}");
        }
    }
}

#[test]
fn block_support_arithmetic() {
    for j in -6..12 {
        let at2 = phi_hat(2.0 / 2f64.powi(j));
        let at1 = phi_hat(1.0 / 2f64.powi(j));
        if j != 0 && j != 1 {
            assert_eq!(at2, 0.0, "j = {j}");
        }
        if j != -1 && j != 0 {
            assert_eq!(at1, 0.0, "j = {j}");
        }
    }
    assert!((phi_hat(2.0) + phi_hat(1.0) - 1.0).abs() < 1e-15);
    assert!((phi_hat(1.0) + phi_hat(0.5) - 1.0).abs() < 1e-15);
}

#[test]
fn two_blocks_cover_radius_two() {
    let g = Grid::new(2, 32).unwrap();
    let bank = build_filter_bank(&g);
    let f = mode_field(g, [2, 0, 0]);
    let sum = bank.dyadic_block(&f, 0).unwrap().add(&bank.dyadic_block(&f, 1).unwrap());
    assert!(sum.sub(&f).max_coeff() < 1e-12);
    for j in bank.js().filter(|j| *j != 0 && *j != 1) {
        assert!(bank.dyadic_block(&f, j).unwrap().is_zero());
    }
}

#[test]
fn distant_blocks_are_orthogonal_and_lowpass_telescopes() {
    let g = Grid::new(2, 32).unwrap();
    let bank = build_filter_bank(&g);
    let f = random_scalar(g, 4, 16.0);
    for j in bank.js() {
        let dj = bank.dyadic_block(&f, j).unwrap();
        for k in bank.js().filter(|k| (k - j).abs() >= 2) {
            assert!(bank.dyadic_block(&dj, k).unwrap().is_zero(), "j={j} k={k}");
        }
    }
    let s = bank.lowpass(&f, bank.j_max() + 1).unwrap();
    assert!(s.sub(&f.without_mean()).max_coeff() < 1e-10);
    let rec = bank.decompose(&f).unwrap().reconstruct().unwrap();
    assert!(rec.sub(&f.without_mean()).max_coeff() < 1e-10);
}

#[test]
fn besov_of_cosine_is_its_l2_norm() {
    for dim in [2, 3] {
        let g = Grid::new(dim, 16).unwrap();
        let bank = build_filter_bank(&g);
        for k in [[1, 0, 0], [3, 2, 0], [5, 0, 0]] {
            let f = mode_field(g, k);
            let spec = NormSpec::besov(0.0, 2.0, Exponent::Finite(1.0)).unwrap();
            let v = besov_norm(&f, &spec, &bank).unwrap();
            let expect = (2.0 * PI).powf(dim as f64 / 2.0) / 2f64.sqrt();
            assert!((v - expect).abs() < 1e-12 * expect, "{v} vs {expect}");
        }
        let zero = SpectralField::zeros(g, 1);
        let spec = NormSpec::critical(3.0, Exponent::Infinity).unwrap();
        assert_eq!(besov_norm(&zero, &spec, &bank).unwrap(), 0.0);
    }
}

#[test]
fn two_cosines_direct_block_sum() {
    let g = Grid::new(2, 64).unwrap();
    let bank = build_filter_bank(&g);
    let f = mode_field(g, [3, 0, 0]).add(&mode_field(g, [17, 0, 0]));
    // Direct: ‖Δ_j f‖₂² = (2π)² Σ_k |φ̂(2^{-j}|k|) f̂(k)|².
    let mut expect: f64 = 0.0;
    for j in -2..8 {
        let w = |r: f64| phi_hat(r / 2f64.powi(j));
        let sq = (2.0 * PI).powi(2) * 2.0 * 0.25 * (w(3.0).powi(2) + w(17.0).powi(2));
        expect = expect.max(2f64.powi(j) * sq.sqrt());
    }
    let spec = NormSpec::besov(1.0, 2.0, Exponent::Infinity).unwrap();
    let v = besov_norm(&f, &spec, &bank).unwrap();
    assert!((v - expect).abs() < 1e-12 * expect, "{v} vs {expect}");
}

fn heat_series(f: &SpectralField, samples: usize, t_final: f64) -> Vec<(f64, SpectralField)> {
    (0..=samples)
        .map(|i| {
            let t = t_final * i as f64 / samples as f64;
            (t, heat_semigroup(f, t).unwrap())
        })
        .collect()
}

#[test]
fn time_besov_examples() {
    let g = Grid::new(2, 8).unwrap();
    let bank = build_filter_bank(&g);
    let f = mode_field(g, [2, 0, 0]);
    let spec = NormSpec::besov(0.5, 2.0, Exponent::Finite(2.0)).unwrap();
    let constant: Vec<(f64, SpectralField)> = (0..5).map(|i| (i as f64 * 0.25, f.clone())).collect();
    let v = time_besov_norm(&constant, &spec, &bank).unwrap();
    assert!((v - besov_norm(&f, &spec, &bank).unwrap()).abs() < 1e-14);

    let zeros: Vec<(f64, SpectralField)> = (0..5).map(|i| (i as f64, SpectralField::zeros(g, 1))).collect();
    assert_eq!(time_besov_norm(&zeros, &spec, &bank).unwrap(), 0.0);

    // Amplitude e^{-4t}: each block picks up (∫₀¹ e^{-8t} dt)^{1/2}.
    let series = heat_series(&f, 4000, 1.0);
    let spec = NormSpec::new(0.0, 2.0, Exponent::Finite(1.0), Exponent::Finite(2.0)).unwrap();
    let v = time_besov_norm(&series, &spec, &bank).unwrap();
    let expect = f.l2_norm() * ((1.0 - (-8.0f64).exp()) / 8.0).sqrt();
    assert!((v - expect).abs() < 1e-6 * expect, "{v} vs {expect}");
}

#[test]
fn epq_examples() {
    let (a, b) = epq_specs(3.0, Exponent::Finite(2.0)).unwrap();
    assert_eq!((a.s, a.r), (0.0, Exponent::Infinity));
    assert!((b.s - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(b.r, Exponent::Finite(3.0));

    let g = Grid::new(2, 8).unwrap();
    let bank = build_filter_bank(&g);
    let zeros: Vec<(f64, SpectralField)> = (0..5).map(|i| (i as f64 * 0.25, SpectralField::zeros(g, 1))).collect();
    assert_eq!(epq_norm(&zeros, 2.0, Exponent::Finite(2.0), 1.0, &bank).unwrap(), 0.0);

    // p = 2, q = 1: Σ_j 2^{j/2}φ̂_j‖f‖ + Σ_j 2^j φ̂_j ‖f‖ (∫₀¹e^{-16t})^{1/4}.
    let f = mode_field(g, [2, 0, 0]);
    let series = heat_series(&f, 8000, 1.0);
    let v = epq_norm(&series, 2.0, Exponent::Finite(1.0), 1.0, &bank).unwrap();
    let w0 = phi_hat(2.0);
    let w1 = phi_hat(1.0);
    let l2 = f.l2_norm();
    let sup = l2 * (w0 + 2f64.sqrt() * w1);
    let integral = l2 * (w0 + 2.0 * w1) * ((1.0 - (-16.0f64).exp()) / 16.0).powf(0.25);
    let expect = sup + integral;
    assert!((v - expect).abs() < 1e-6 * expect, "{v} vs {expect}");

    let bs = BlockSeries::new(&series, 2.0, &bank).unwrap();
    assert!(epq_halving_defect(&bs, Exponent::Finite(1.0)).unwrap() < 0.01);
}

#[test]
fn paraproduct_reconstructs_product() {
    let g = Grid::new(2, 32).unwrap();
    let bank = build_filter_bank(&g);

    let f = random_scalar(g, 1, 6.0).without_mean();
    let mut constant = SpectralField::zeros(g, 1);
    constant.set_mode(0, &[0, 0, 0], c(3.0));
    let pp = paraproduct(&f, &constant, &bank, TWO_THIRDS).unwrap();
    assert!(pp.t_fg.max_coeff() < 1e-15);

    let m = mode_field(g, [2, 0, 0]);
    let pp = paraproduct(&m, &m, &bank, TWO_THIRDS).unwrap();
    let direct = dealiased_product(&m, &m, TWO_THIRDS).unwrap();
    assert!(pp.sum().sub(&direct).max_coeff() < 1e-10);

    for seed in 0..3 {
        let f = random_scalar(g, 10 + seed, 8.0).without_mean();
        let h = random_scalar(g, 20 + seed, 8.0).without_mean();
        let pp = paraproduct(&f, &h, &bank, TWO_THIRDS).unwrap();
        let direct = dealiased_product(&f, &h, TWO_THIRDS).unwrap();
        assert!(pp.sum().sub(&direct).max_coeff() < 1e-10 * direct.max_coeff().max(1.0));
    }
}

#[test]
fn exponent_parsing() {
    assert_eq!("inf".parse::<Exponent>().unwrap(), Exponent::Infinity);
    assert_eq!("2".parse::<Exponent>().unwrap(), Exponent::Finite(2.0));
    assert!(NormSpec::besov(0.0, 1.0, Exponent::Finite(2.0)).is_err());
    assert!(NormSpec::besov(0.0, 2.0, Exponent::Finite(0.5)).is_err());
}
