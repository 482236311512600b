use std::collections::HashMap;

use nsg_core::field::{MultiIndex, SpectralField};
use nsg_core::grid::{Grid, Wavevector};
use nsg_core::init::{random_scalar, random_velocity, taylor_green, RandomDataSpec};
use nsg_core::spectral::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_vector(grid: Grid, seed: u64, kmax: f64) -> SpectralField {
    let parts: Vec<SpectralField> = (0..grid.dim()).map(|i| random_scalar(grid, seed * 7 + i as u64, kmax)).collect();
    SpectralField::stack(&parts).unwrap()
}

#[test]
fn pure_mode_to_physical() {
    let g = Grid::new(2, 16).unwrap();
    let mut f = SpectralField::zeros(g, 1);
    f.set_real_mode(0, &[3, 0, 0], c(1.0, 0.0));
    let samples = f.to_physical();
    for (flat, v) in samples.iter().enumerate() {
        let x = g.point(flat)[0];
        assert!((v - 2.0 * (3.0 * x).cos()).abs() < 1e-12);
    }
    let back = SpectralField::to_spectral(&samples, g, 1).unwrap();
    assert!(back.sub(&f).max_coeff() < 1e-12);
    let zero = SpectralField::zeros(g, 1);
    assert!(zero.to_physical().iter().all(|v| *v == 0.0));
}

#[test]
fn random_round_trip_n32() {
    for dim in [2, 3] {
        let g = Grid::new(dim, 32).unwrap();
        let f = random_scalar(g, 11, 16.0);
        let back = SpectralField::to_spectral(&f.to_physical(), g, 1).unwrap();
        assert!(back.sub(&f).max_coeff() < 1e-12, "dim {dim}");
    }
}

#[test]
fn leray_hand_examples() {
    let g = Grid::new(2, 8).unwrap();
    let cases: [([i64; 3], [f64; 2], [f64; 2]); 3] = [
        ([1, 0, 0], [1.0, 0.0], [0.0, 0.0]),
        ([1, 0, 0], [0.0, 1.0], [0.0, 1.0]),
        ([1, 1, 0], [1.0, 0.0], [0.5, -0.5]),
    ];
    for (k, input, expected) in cases {
        let mut f = SpectralField::zeros(g, 2);
        for comp in 0..2 {
            f.set_mode(comp, &k, c(input[comp], 0.0));
        }
        let p = leray_project(&f).unwrap();
        for comp in 0..2 {
            assert!((p.mode(comp, &k) - c(expected[comp], 0.0)).norm() < 1e-15);
        }
    }
}

#[test]
fn heat_and_gevrey_examples() {
    let g = Grid::new(2, 16).unwrap();
    let mut f = SpectralField::zeros(g, 1);
    f.set_mode(0, &[3, 0, 0], c(1.0, 0.0));
    let h = heat_semigroup(&f, 1.0).unwrap();
    assert!((h.mode(0, &[3, 0, 0]).re - (-9.0f64).exp()).abs() < 1e-18);
    assert_eq!(heat_semigroup(&f, 0.0).unwrap(), f);

    let mut f = SpectralField::zeros(g, 1);
    f.set_mode(0, &[1, 2, 0], c(1.0, 0.0));
    let e = gevrey_multiplier(&f, 0.5).unwrap();
    assert!((e.mode(0, &[1, 2, 0]).re - 1.5f64.exp()).abs() < 1e-14);
    assert_eq!(gevrey_multiplier(&f, 0.0).unwrap(), f);
}

#[test]
fn heat_semigroup_composes() {
    let g = Grid::new(2, 32).unwrap();
    let f = random_scalar(g, 3, 10.0);
    let ab = heat_semigroup(&heat_semigroup(&f, 0.03).unwrap(), 0.07).unwrap();
    let direct = heat_semigroup(&f, 0.1).unwrap();
    assert!(ab.sub(&direct).max_coeff() < 1e-14 * f.max_coeff().max(1.0));
}

#[test]
fn gevrey_inverse_pair() {
    let g = Grid::new(2, 32).unwrap();
    let f = random_scalar(g, 5, 15.0);
    for a in [-0.2, -0.05, 0.1, 0.2] {
        let back = gevrey_multiplier(&gevrey_multiplier(&f, a).unwrap(), -a).unwrap();
        assert!(back.relative_error(&f) < 1e-12, "a = {a}");
    }
}

#[test]
fn derivative_hand_examples() {
    let g = Grid::new(2, 16).unwrap();
    let mut f = SpectralField::zeros(g, 1);
    f.set_mode(0, &[2, 0, 0], c(1.0, 0.0));
    let d = derivative(&f, MultiIndex::new(&[1, 0]).unwrap()).unwrap();
    assert!((d.mode(0, &[2, 0, 0]) - c(0.0, 2.0)).norm() < 1e-15);
    assert_eq!(derivative(&f, MultiIndex::new(&[0, 0]).unwrap()).unwrap(), f);

    let mut f = SpectralField::zeros(g, 1);
    f.set_mode(0, &[2, 3, 0], c(1.0, 0.0));
    let d = derivative(&f, MultiIndex::new(&[1, 1]).unwrap()).unwrap();
    assert!((d.mode(0, &[2, 3, 0]) - c(-6.0, 0.0)).norm() < 1e-15);
}

#[test]
fn taylor_green_nonlinearity_is_a_gradient() {
    let g = Grid::new(2, 32).unwrap();
    let u = taylor_green(g, 1.0).unwrap();
    // Unprojected: the divergence of u⊗u is parallel to k at every mode.
    let n = g.len();
    let mut raw = vec![c(0.0, 0.0); 2 * n];
    for i in 0..2 {
        for j in 0..2 {
            let prod = dealiased_product(&u.scalar(i), &u.scalar(j), TWO_THIRDS).unwrap();
            for flat in 0..n {
                let kj = g.wavevector(flat)[j] as f64;
                raw[i * n + flat] += c(0.0, kj) * prod.coeffs()[flat];
            }
        }
    }
    for flat in 1..n {
        let k = g.wavevector(flat);
        let cross = raw[flat] * k[1] as f64 - raw[n + flat] * k[0] as f64;
        assert!(cross.norm() < 1e-12);
    }
    assert!(nonlinear_term(&u, TWO_THIRDS).unwrap().max_coeff() < 1e-12);
}

/// `ℙ Σ_j i k_j Σ_{p+q=k} û_i(p) v̂_j(q)` by direct convolution.
fn brute_bilinear(u: &SpectralField, v: &SpectralField) -> HashMap<Wavevector, [Complex64; 2]> {
    let g = *u.grid();
    let support = |f: &SpectralField| -> Vec<Wavevector> {
        g.wavevectors().filter(|k| (0..2).any(|c| f.mode(c, k).norm() > 0.0)).collect()
    };
    let mut out: HashMap<Wavevector, [Complex64; 2]> = HashMap::new();
    for p in support(u) {
        for q in support(v) {
            let k = [p[0] + q[0], p[1] + q[1], 0];
            let entry = out.entry(k).or_insert([c(0.0, 0.0); 2]);
            for i in 0..2 {
                for j in 0..2 {
                    entry[i] += c(0.0, k[j] as f64) * u.mode(i, &p) * v.mode(j, &q);
                }
            }
        }
    }
    for (k, val) in out.iter_mut() {
        let k2 = (k[0] * k[0] + k[1] * k[1]) as f64;
        if k2 > 0.0 {
            let dot = (val[0] * k[0] as f64 + val[1] * k[1] as f64) / k2;
            val[0] -= dot * k[0] as f64;
            val[1] -= dot * k[1] as f64;
        }
    }
    out
}

#[test]
fn single_mode_pair_matches_convolution() {
    let g = Grid::new(2, 8).unwrap();
    let mut u = SpectralField::zeros(g, 2);
    u.set_real_mode(1, &[1, 0, 0], c(0.3, -0.2));
    u.set_real_mode(0, &[0, 1, 0], c(0.0, 0.7));
    let out = bilinear_term(&u, &u, TWO_THIRDS).unwrap();
    let oracle = brute_bilinear(&u, &u);
    for k in g.wavevectors() {
        let expect = oracle.get(&k).copied().unwrap_or([c(0.0, 0.0); 2]);
        for comp in 0..2 {
            assert!((out.mode(comp, &k) - expect[comp]).norm() < 1e-14, "k = {k:?}");
        }
        if nsg_core::grid::norm_l1(&k) > 2 {
            assert!(out.mode(0, &k).norm() + out.mode(1, &k).norm() < 1e-15);
        }
    }
}

#[test]
fn bilinear_matches_convolution_on_band_limited_pairs() {
    let g = Grid::new(2, 16).unwrap();
    let u = random_velocity(g, &RandomDataSpec::new(1, 1.0).with_kmax(2.0)).unwrap();
    let v = random_velocity(g, &RandomDataSpec::new(2, 1.0).with_kmax(2.0)).unwrap();
    let out = bilinear_term(&u, &v, TWO_THIRDS).unwrap();
    let oracle = brute_bilinear(&u, &v);
    for k in g.wavevectors() {
        let expect = oracle.get(&k).copied().unwrap_or([c(0.0, 0.0); 2]);
        for comp in 0..2 {
            assert!((out.mode(comp, &k) - expect[comp]).norm() < 1e-13);
        }
    }
}

#[test]
fn nonlinear_term_is_diagonal_of_bilinear() {
    let g = Grid::new(3, 16).unwrap();
    let u = random_velocity(g, &RandomDataSpec::new(9, 1.0)).unwrap();
    let a = nonlinear_term(&u, TWO_THIRDS).unwrap();
    let b = bilinear_term(&u, &u.as_field().clone(), TWO_THIRDS).unwrap();
    assert_eq!(a.as_field(), &b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn round_trip_is_exact(seed in 0u64..10_000, dim in 2usize..=3, kmax in 1.0f64..8.0) {
        let g = Grid::new(dim, 16).unwrap();
        let f = random_scalar(g, seed, kmax);
        let back = SpectralField::to_spectral(&f.to_physical(), g, 1).unwrap();
        prop_assert!(back.sub(&f).max_coeff() < 1e-12);
    }

    #[test]
    fn leray_is_an_orthogonal_projection(seed in 0u64..10_000, dim in 2usize..=3) {
        let g = Grid::new(dim, 8).unwrap();
        let f = random_vector(g, seed, 4.0);
        let p = leray_project(&f).unwrap();
        let pp = leray_project(p.as_field()).unwrap();
        prop_assert!(pp.as_field().sub(p.as_field()).max_coeff() < 1e-14);
        let n = g.len();
        let mut worst: f64 = 0.0;
        for flat in 0..n {
            let mut dot = c(0.0, 0.0);
            for comp in 0..dim {
                let pu = p.as_field().coeffs()[comp * n + flat];
                let r = f.coeffs()[comp * n + flat] - pu;
                dot += r * pu.conj();
            }
            worst = worst.max(dot.norm());
        }
        prop_assert!(worst < 1e-13);
        prop_assert!(p.as_field().hermitian_defect() < 1e-15);
    }

    #[test]
    fn diagonal_multipliers_commute(seed in 0u64..10_000, t in 0.0f64..0.5, a in -0.3f64..0.3, ax in 0u32..3, ay in 0u32..3) {
        let g = Grid::new(2, 16).unwrap();
        let f = random_scalar(g, seed, 8.0);
        let alpha = MultiIndex::new(&[ax, ay]).unwrap();
        let scale = f.max_coeff() * 64.0;
        let hg = heat_semigroup(&gevrey_multiplier(&f, a).unwrap(), t).unwrap();
        let gh = gevrey_multiplier(&heat_semigroup(&f, t).unwrap(), a).unwrap();
        prop_assert!(hg.sub(&gh).max_coeff() < 1e-13 * scale);
        let dh = derivative(&heat_semigroup(&f, t).unwrap(), alpha).unwrap();
        let hd = heat_semigroup(&derivative(&f, alpha).unwrap(), t).unwrap();
        prop_assert!(dh.sub(&hd).max_coeff() < 1e-13 * scale);
        let dg = derivative(&gevrey_multiplier(&f, a).unwrap(), alpha).unwrap();
        let gd = gevrey_multiplier(&derivative(&f, alpha).unwrap(), a).unwrap();
        prop_assert!(dg.sub(&gd).max_coeff() < 1e-13 * scale);
        for h in [&hg, &dh, &dg] {
            prop_assert!(h.hermitian_defect() < 1e-13 * scale);
        }
    }
}
