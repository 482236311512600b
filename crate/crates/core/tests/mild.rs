use nsg_core::field::{SpectralField, VelocityField};
use nsg_core::grid::{norm_sq, Grid};
use nsg_core::init::{random_velocity, taylor_green, RandomDataSpec};
use nsg_core::lp::{build_filter_bank, Exponent};
use nsg_core::mild::*;
use nsg_core::spectral::{bilinear_term, heat_semigroup, laplacian, TWO_THIRDS};
use nsg_core::NsgError;

fn g2(n: usize) -> Grid {
    Grid::new(2, n).unwrap()
}

fn small_data(grid: Grid, seed: u64, target: f64) -> VelocityField {
    let mut spec = RandomDataSpec::new(seed, 1.0).with_target(target);
    spec.dealias_fraction = Some(TWO_THIRDS);
    random_velocity(grid, &spec).unwrap()
}

fn constant_trajectory(u: &VelocityField, times: &[f64]) -> SolutionTrajectory {
    let cfg = SolverConfig::new(*u.grid(), *times.last().unwrap(), times.len() - 1);
    SolutionTrajectory::new(cfg, times.to_vec(), vec![u.clone(); times.len()]).unwrap()
}

#[test]
fn heat_part_examples() {
    let g = g2(16);
    let u0 = taylor_green(g, 1.0).unwrap();
    let times = [0.0, 0.1, 0.35, 1.0];
    let h = heat_part(&u0, &times).unwrap();
    assert_eq!(h[0], u0);
    for (t, f) in times.iter().zip(&h) {
        assert!(f.as_field().relative_error(&u0.scale((-2.0 * t).exp())) < 1e-15);
    }
    for i in 1..times.len() {
        let step = heat_semigroup(&h[i - 1], times[i] - times[i - 1]).unwrap();
        assert!(step.sub(&h[i]).max_coeff() < 1e-14);
    }
}

#[test]
fn duhamel_of_steady_forcing_is_closed_form() {
    let g = g2(16);
    let u = single_mode_velocity(g, [1, 0, 0], [0.0, 1.0, 0.0]).unwrap();
    let v = single_mode_velocity(g, [0, 1, 0], [1.0, 0.0, 0.0]).unwrap();
    let forcing = bilinear_term(&u, &v, TWO_THIRDS).unwrap();
    assert!(!forcing.is_zero());
    let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.05).collect();
    let (tu, tv) = (constant_trajectory(&u, &times), constant_trajectory(&v, &times));
    for &t in &[0.05, 0.237, 0.5] {
        let b = bilinear_duhamel(&tu, &tv, t).unwrap();
        let expect = forcing.apply_real_symbol(|k| {
            let k2 = norm_sq(k);
            if k2 == 0.0 {
                t
            } else {
                (1.0 - (-t * k2).exp()) / k2
            }
        });
        assert!(b.sub(&expect).max_coeff() < 1e-8 * forcing.max_coeff(), "t = {t}");
    }
    let zero = constant_trajectory(&VelocityField::zeros(g), &times);
    assert!(bilinear_duhamel(&zero, &tv, 0.5).unwrap().is_zero());
}

#[test]
fn duhamel_polarization() {
    let g = g2(16);
    let times: Vec<f64> = (0..=8).map(|i| i as f64 * 0.05).collect();
    let series = |seed: u64| -> Vec<SpectralField> {
        let base = small_data(g, seed, 1.0);
        times.iter().map(|t| heat_semigroup(&base, *t).unwrap().scale(1.0 + t)).collect()
    };
    let (u, v) = (series(1), series(2));
    let b = |a: &[SpectralField], c: &[SpectralField]| duhamel_series(&times, a, c, 2, TWO_THIRDS).unwrap();
    let plus: Vec<SpectralField> = u.iter().zip(&v).map(|(a, c)| a.add(c)).collect();
    let minus: Vec<SpectralField> = u.iter().zip(&v).map(|(a, c)| a.sub(c)).collect();
    let (uv, vu, pp, mm) = (b(&u, &v), b(&v, &u), b(&plus, &plus), b(&minus, &minus));
    for i in 0..times.len() {
        let lhs = uv[i].add(&vu[i]);
        let rhs = pp[i].sub(&mm[i]).scale(0.5);
        assert!(lhs.sub(&rhs).max_coeff() < 1e-12 * rhs.max_coeff().max(1e-300));
    }
}

#[test]
fn zero_data_stays_zero() {
    let g = g2(16);
    let cfg = SolverConfig::new(g, 1.0, 10);
    let traj = step_solve(&VelocityField::zeros(g), &cfg).unwrap();
    assert!(traj.velocity.iter().all(|u| u.is_zero()));
    let (traj, report) = picard_solve(&VelocityField::zeros(g), &cfg).unwrap();
    assert_eq!(report.iterations, 1);
    assert!(report.converged);
    assert!(traj.velocity.iter().all(|u| u.is_zero()));
}

#[test]
fn taylor_green_decays_exactly() {
    let g = g2(32);
    let u0 = taylor_green(g, 1.0).unwrap();
    let traj = step_solve(&u0, &SolverConfig::new(g, 1.0, 200)).unwrap();
    for (t, u) in traj.times.iter().zip(&traj.velocity) {
        assert!(u.as_field().relative_error(&u0.scale((-2.0 * t).exp())) < 1e-6);
        VelocityField::new(u.as_field().clone()).unwrap();
    }
}

#[test]
fn recorded_fields_are_divergence_free() {
    let g = g2(16);
    let u0 = small_data(g, 3, 0.5);
    let mut cfg = SolverConfig::new(g, 0.5, 50);
    cfg.record_every = 5;
    let traj = step_solve(&u0, &cfg).unwrap();
    assert_eq!(traj.len(), 11);
    for u in &traj.velocity {
        VelocityField::new(u.as_field().clone()).unwrap();
    }
}

#[test]
fn step_solve_is_second_order() {
    let g = g2(16);
    let u0 = small_data(g, 7, 2.0);
    let finals: Vec<SpectralField> = [20, 40, 80]
        .iter()
        .map(|&steps| {
            step_solve(&u0, &SolverConfig::new(g, 0.5, steps)).unwrap().velocity.last().unwrap().as_field().clone()
        })
        .collect();
    let e1 = finals[0].sub(&finals[1]).l2_norm();
    let e2 = finals[1].sub(&finals[2]).l2_norm();
    let order = (e1 / e2).log2();
    assert!(order >= 1.9, "observed order {order} ({e1:e}, {e2:e})");
}

#[test]
fn picard_small_taylor_green_has_no_fluctuation() {
    let g = g2(16);
    let u0 = taylor_green(g, 1e-3).unwrap();
    let (_, report) = picard_solve(&u0, &SolverConfig::new(g, 1.0, 20)).unwrap();
    assert!(report.residuals[0] < 1e-12);
}

#[test]
fn picard_agrees_with_step_solve_on_small_data() {
    let g = g2(16);
    let u0 = small_data(g, 11, 1e-2);
    let cfg = SolverConfig::new(g, 1.0, 100);
    let (pic, report) = picard_solve(&u0, &cfg).unwrap();
    assert!(report.converged && !report.above_smallness_threshold);
    assert!(report.contraction_ratios.iter().all(|r| *r < 0.5), "{:?}", report.contraction_ratios);
    let step = step_solve(&u0, &cfg).unwrap();
    let bank = build_filter_bank(&g);
    let d = epq_distance(&pic, &step, 2.0, Exponent::Finite(2.0), &bank).unwrap();
    assert!(d < f64::max(1e-6, 10.0 * cfg.picard_tol), "{d}");
}

#[test]
fn picard_failure_is_reported() {
    let g = g2(16);
    let u0 = small_data(g, 11, 1e-2);
    let mut cfg = SolverConfig::new(g, 1.0, 20);
    cfg.picard_max_iters = 1;
    cfg.picard_tol = 1e-14;
    match picard_solve(&u0, &cfg) {
        Err(NsgError::FixedPointFailure { report }) => {
            assert_eq!(report.iterations, 1);
            assert_eq!(report.stop_reason, "iteration limit reached");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn mild_residual_small_on_small_data() {
    let g = g2(16);
    let u0 = small_data(g, 5, 1e-2);
    let traj = step_solve(&u0, &SolverConfig::new(g, 1.0, 100)).unwrap();
    for (t, r) in mild_residual(&traj).unwrap() {
        assert!(r < 1e-6, "t = {t}: {r}");
    }
}

#[test]
fn derivative_stack_of_shear_is_heat() {
    let g = g2(16);
    let u = single_mode_velocity(g, [2, 0, 0], [0.0, 1.0, 0.0]).unwrap();
    let stack = derivative_stack_at(&u, 4, TWO_THIRDS).unwrap();
    let mut lap = u.as_field().clone();
    for s in &stack[1..] {
        lap = laplacian(&lap);
        assert!(s.sub(&lap).max_coeff() < 1e-12 * lap.max_coeff());
    }
    assert!(derivative_stack_at(&u, 5, TWO_THIRDS).is_ok());
    let traj = constant_trajectory(&u, &[0.0, 1.0]);
    assert!(time_derivative_stack(&traj, 5).is_err());
}

#[test]
fn taylor_green_time_derivative() {
    let g = g2(32);
    let u = taylor_green(g, 1.0).unwrap();
    let stack = derivative_stack_at(&u, 2, TWO_THIRDS).unwrap();
    assert!(stack[1].sub(&u.scale(-2.0)).max_coeff() < 1e-10);
    assert!(stack[2].sub(&u.scale(4.0)).max_coeff() < 1e-10);
}

#[test]
fn weighted_derivative_matches_product_rule() {
    // ∂ₜ(t u) = u + t ∂ₜu; ∂ₜ²(t² u) = 2u + 4t∂ₜu + t²∂ₜ²u.
    let g = g2(16);
    let u = small_data(g, 2, 0.3);
    let stack = derivative_stack_at(&u, 2, TWO_THIRDS).unwrap();
    let t = 0.7;
    let w1 = weighted_time_derivative(&stack, t, 1).unwrap();
    assert!(w1.sub(&stack[0].axpy(t, &stack[1])).max_coeff() < 1e-15);
    let w2 = weighted_time_derivative(&stack, t, 2).unwrap();
    let expect = stack[0].scale(2.0).axpy(4.0 * t, &stack[1]).axpy(t * t, &stack[2]);
    assert!(w2.sub(&expect).max_coeff() < 1e-14 * expect.max_coeff());
}

#[test]
fn time_derivative_matches_central_differences() {
    let g = g2(16);
    let u0 = small_data(g, 9, 1.0);
    let cfg = SolverConfig::new(g, 1.0, 2000);
    let traj = step_solve(&u0, &cfg).unwrap();
    let dt = cfg.step_size();
    let at = |t: f64| traj.velocity[(t / dt).round() as usize].as_field().clone();
    let t0 = 0.5;
    let exact = derivative_stack_at(&at(t0), 1, TWO_THIRDS).unwrap().remove(1);
    let err: Vec<f64> =
        [0.08, 0.04, 0.02].iter().map(|&h| at(t0 + h).sub(&at(t0 - h)).scale(0.5 / h).sub(&exact).l2_norm()).collect();
    let order = (err[0] / err[1]).log2().min((err[1] / err[2]).log2());
    assert!(order >= 1.9, "orders from {err:?}");
}
