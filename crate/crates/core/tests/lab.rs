use nsg_core::grid::Grid;
use nsg_core::lab::*;
use nsg_core::lp::build_filter_bank;
use num_bigint::BigInt;
use num_rational::BigRational;

/// `base^exp` in u128 with `0^s = 1`.
fn pow0(base: u128, exp: i64) -> u128 {
    if base == 0 {
        1
    } else {
        base.pow(exp as u32)
    }
}

fn binom(n: u128, k: u128) -> u128 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn kahane_matches_machine_integer_sum() {
    for n in 1..=20u128 {
        let direct: u128 = (0..=n).map(|j| binom(n, j) * pow0(j, j as i64 - 1) * pow0(n - j, (n - j) as i64 - 1)).sum();
        let exact = kahane_sum(n as u64).unwrap();
        assert_eq!(exact.sum, BigInt::from(direct), "n = {n}");
        // ratio = (4n-2)/n
        let expect = BigRational::new(BigInt::from(4 * n as i64 - 2), BigInt::from(n as i64));
        assert_eq!(exact.ratio, expect);
    }
}

#[test]
fn kahane_report_covers_two_hundred() {
    let r = kahane_report(200).unwrap();
    assert!(r.passed(), "{r:?}");
    assert!((r.measured_constant - 798.0 / 200.0).abs() < 1e-12);
    let table = kahane_table(200).unwrap();
    assert!(table.windows(2).all(|w| w[0].1 < w[1].1 && w[1].1 < 4.0));
}

#[test]
fn leibniz_rhs_matches_direct_lhs() {
    // f = e^t, g = t²: ∂ₜ³(t⁵eᵗ) = eᵗ Σ_k C(3,k) (t⁵)^{(k)}
    let f = "exp:1".parse::<FuncSpec>().unwrap().to_quasi().unwrap();
    let g = "poly:0,0,1".parse::<FuncSpec>().unwrap().to_quasi().unwrap();
    let (_, rhs) = leibniz_sides(3, &f, &g);
    for t in [0.3f64, 1.0, 1.7] {
        let d = [t.powi(5), 5.0 * t.powi(4), 20.0 * t.powi(3), 60.0 * t * t];
        let lhs = t.exp() * (d[0] + 3.0 * d[1] + 3.0 * d[2] + d[3]);
        assert!((rhs.eval(t) - lhs).abs() < 1e-10 * lhs.abs());
    }
}

#[test]
fn leibniz_family_sweep() {
    let r = leibniz_report().unwrap();
    assert!(r.passed(), "{r:?}");
    assert!(r.measured_constant < 1e-9);
}

#[test]
fn heat_gevrey_constants_are_stable() {
    let r = heat_gevrey_report(Grid::new(2, 32).unwrap(), 2.0).unwrap();
    assert!(r.passed(), "{r:?}");
}

#[test]
fn random_block_decay_rates_in_bracket() {
    let g = Grid::new(2, 64).unwrap();
    let bank = build_filter_bank(&g);
    for j in 0..=5 {
        for seed in [1, 2] {
            let fit = heat_localization_probe(j, &bank, seed).unwrap();
            assert!(fit.within(), "{fit:?}");
        }
    }
    assert!(heat_localization_report(g).unwrap().passed());
}

#[test]
fn bernstein_constants() {
    let r = bernstein_report(Grid::new(2, 32).unwrap()).unwrap();
    assert!(r.passed(), "{r:?}");
    let bank = build_filter_bank(&Grid::new(2, 32).unwrap());
    let m = bernstein_probe(&bank, 2, 2.0, 0, 1).unwrap();
    assert!((m.upper - 1.0).abs() < 1e-14 && (m.lower - 1.0).abs() < 1e-14);
}

#[test]
fn lp_and_gevrey_reports_pass() {
    let grids: Vec<Grid> = [(2, 16), (2, 32), (3, 16)].iter().map(|&(d, n)| Grid::new(d, n).unwrap()).collect();
    assert!(lp_report(&grids).unwrap().passed());
    for r in gevrey_reports().unwrap() {
        assert!(r.passed(), "{r:?}");
    }
}

#[test]
fn report_json_shape() {
    let r = kahane_report(10).unwrap();
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    for key in ["lemma_id", "range_tested", "status", "measured_constant", "worst_case"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["status"], "pass");
    assert_eq!(v["lemma_id"], "kahane_sum");
}
