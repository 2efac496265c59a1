use std::f64::consts::PI;

use msfrac_core::evolve::{check_parabolic_smoothing, regularity_monitor, run, trajectory, Solver, SolverConfig};
use msfrac_core::fields::{linf_norm, lipschitz_estimate, rough_field, TorusField, TorusGrid};
use msfrac_core::modulus::{assemble_time_modulus, TheoryConstants};
use msfrac_core::PdeParams;

fn config(params: PdeParams, n: usize, dt: f64, t_end: f64) -> SolverConfig {
    SolverConfig::new(params, TorusGrid::new(params.dim, 2.0 * PI, n).unwrap(), dt, t_end).unwrap()
}

/// Error at `t_end` against `θ* = e^{−t} sin x` driven by the matching source.
fn manufactured_error(n: usize, dt: f64) -> f64 {
    let (nu, mu, lambda) = (1.0, 0.5, 0.1);
    let params = PdeParams::new(nu, 0.25, 2.0, mu, lambda, 1).unwrap();
    let cfg = config(params, n, dt, 1.0);
    let grid = cfg.grid.clone();
    let solver = Solver::new(cfg.clone()).unwrap();
    let g2 = grid.clone();
    let source = move |t: f64| {
        TorusField::from_fn(&g2, |x| {
            (-1.0 + nu - mu) * (-t).exp() * x[0].sin() - lambda * (-2.0 * t).exp() * x[0].cos().powi(2)
        })
    };
    let mut theta = TorusField::from_fn(&grid, |x| x[0].sin());
    for i in 0..cfg.steps() {
        theta = solver.step_with_source(&theta, i as f64 * dt, Some(&source)).unwrap();
    }
    let exact = TorusField::from_fn(&grid, |x| (-1f64).exp() * x[0].sin());
    linf_norm(&theta.sub(&exact))
}

#[test]
fn manufactured_solution_converges_at_second_order_in_time() {
    let errors: Vec<f64> = [0.1, 0.05, 0.025, 0.0125].iter().map(|dt| manufactured_error(16, *dt)).collect();
    for w in errors.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.85, "{errors:?}");
    }
}

#[test]
fn manufactured_solution_is_resolved_spectrally_in_space() {
    let coarse = manufactured_error(16, 0.0125);
    let fine = manufactured_error(64, 0.0125);
    assert!((coarse - fine).abs() < 1e-12, "{coarse} vs {fine}");
}

#[test]
fn hamilton_jacobi_flow_does_not_steepen() {
    for lambda in [1.0, -1.0] {
        let params = PdeParams::new(1.0, 0.25, 2.0, 0.0, lambda, 1).unwrap();
        let mut cfg = config(params, 128, 1e-3, 1.0);
        cfg.record_every = 10;
        let theta0 = TorusField::from_fn(&cfg.grid, |x| x[0].sin() + 0.5 * (2.0 * x[0]).cos());
        let rep = run(&theta0, &cfg, None).unwrap();
        let lip0 = rep.lip[0];
        assert!(rep.lip.iter().all(|l| *l <= lip0 + 1e-3), "lambda = {lambda}");
    }
}

#[test]
fn time_refinement_self_converges() {
    let params = PdeParams::new(1.0, 0.25, 2.0, 1.0, 1.0, 1).unwrap();
    let finals: Vec<TorusField> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|dt| {
            let cfg = config(params, 64, *dt, 0.5);
            let theta0 = TorusField::from_fn(&cfg.grid, |x| x[0].sin());
            trajectory(&theta0, &cfg).unwrap().pop().unwrap().1
        })
        .collect();
    let factor = linf_norm(&finals[0].sub(&finals[1])) / linf_norm(&finals[1].sub(&finals[2]));
    assert!(factor >= 3.6, "{factor}");
}

#[test]
fn doubling_resolution_leaves_smooth_solutions_unchanged() {
    let params = PdeParams::new(1.0, 0.25, 2.0, 1.0, 1.0, 1).unwrap();
    let run_at = |n| {
        let cfg = config(params, n, 1e-3, 0.5);
        let theta0 = TorusField::from_fn(&cfg.grid, |x| x[0].sin());
        trajectory(&theta0, &cfg).unwrap().pop().unwrap().1
    };
    let (coarse, fine) = (run_at(64), run_at(128));
    let diff = coarse
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| (v - fine.values()[2 * i]).abs())
        .fold(0.0, f64::max);
    assert!(diff < 1e-6, "{diff}");
}

#[test]
fn rough_data_are_smoothed_at_the_parabolic_rate() {
    let params = PdeParams::new(1.0, 0.25, 2.0, 1.0, 1.0, 1).unwrap();
    let mut cfg = config(params, 256, 1e-3, 1.0);
    cfg.record_every = 10;
    cfg.keep_snapshots = true;
    let theta0 = rough_field(&cfg.grid, 0.75, 9);
    let rep = run(&theta0, &cfg, None).unwrap();

    let half = check_parabolic_smoothing(&rep, 0.5, 0.01).unwrap();
    assert!(half.pass);
    let (lo, hi) = (3.0 * half.expected_exponent, half.expected_exponent / 3.0);
    assert!(half.fitted_exponent >= lo && half.fitted_exponent <= hi, "{half:?}");

    let sharp = check_parabolic_smoothing(&rep, 1.0 - 2.0 * params.alpha, 0.01).unwrap();
    assert!(sharp.pass && sharp.envelope_constant.is_finite());

    let smooth = TorusField::from_fn(&cfg.grid, |x| x[0].sin());
    let rep = run(&smooth, &cfg, None).unwrap();
    let s = check_parabolic_smoothing(&rep, 0.5, 0.01).unwrap();
    assert!(s.pass && s.envelope_constant < 10.0);
}

#[test]
fn regularity_monitor_bounds_the_sup_norm_across_a_sweep() {
    for (lambda, p) in [(1.0, 1.0), (-1.0, 2.0), (1.0, 2.0), (-1.0, 3.0), (0.0, 2.0)] {
        let params = PdeParams::new(1.0, 0.25, p, 1.0, lambda, 1).unwrap();
        let mut cfg = config(params, 128, 1e-3, 1.0);
        cfg.record_every = 20;
        let theta0 = TorusField::from_fn(&cfg.grid, |x| x[0].sin() + 0.3 * (3.0 * x[0]).cos());
        let rep = run(&theta0, &cfg, None).unwrap();
        let mon = regularity_monitor(&rep, &params).unwrap();
        assert!(mon.pass, "lambda = {lambda}, p = {p}: {:?}", mon.margins);
    }
}

#[test]
fn gradient_stays_below_the_modulus_bound_and_growth_is_recorded() {
    let params = PdeParams::new(1.0, 0.25, 2.0, 1.0, 1.0, 1).unwrap();
    let mut cfg = config(params, 128, 1e-3, 0.5);
    cfg.record_every = 50;
    let theta0 = TorusField::from_fn(&cfg.grid, |x| x[0].sin());
    let tm = assemble_time_modulus(&theta0, &params).unwrap();
    let rep = run(&theta0, &cfg, Some(&tm)).unwrap();
    assert!(rep.worst_bound_excess().unwrap() < 0.0);
    assert!(rep.modulus_min_margin.iter().all(|m| m.unwrap() >= 0.0));
    assert!(rep.growth_exponent().unwrap().is_finite());
}

#[test]
fn small_data_start_strictly_inside_the_modulus_bound() {
    let g = TorusGrid::new(1, 2.0 * PI, 256).unwrap();
    let theta0 = TorusField::from_fn(&g, |x| 0.1 * x[0].sin());
    let params = PdeParams::new(1.0, 0.25, 2.0, 0.5, 1.0, 1).unwrap();
    let tm = assemble_time_modulus(&theta0, &params).unwrap();
    assert!(tm.gradient_bound(0.0) > lipschitz_estimate(&theta0));
}

#[test]
fn modulus_constants_ignore_the_gradient_term_and_the_period() {
    let g = TorusGrid::new(1, 2.0 * PI, 256).unwrap();
    let theta0 = TorusField::from_fn(&g, |x| x[0].sin());
    let base = PdeParams::new(1.0, 0.25, 2.0, 1.0, 1.0, 1).unwrap();
    let (c, _) = TheoryConstants::compute(&theta0, &base).unwrap();
    for (lambda, p) in [(-1.0, 2.0), (3.0, 1.0), (0.5, 3.0)] {
        let other = PdeParams { lambda, p, ..base };
        let (o, _) = TheoryConstants::compute(&theta0, &other).unwrap();
        assert_eq!((o.b, o.delta0, o.c0), (c.b, c.delta0, c.c0));
    }
    let wide = TorusGrid::new(1, 4.0 * PI, 512).unwrap();
    let theta_wide = TorusField::from_fn(&wide, |x| x[0].sin());
    let (w, _) = TheoryConstants::compute(&theta_wide, &base).unwrap();
    assert_eq!((w.b, w.delta0), (c.b, c.delta0));
    assert!((w.c0 - c.c0).abs() <= 1e-12 * c.c0);
}
