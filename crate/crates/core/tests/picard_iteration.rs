use std::f64::consts::PI;

use msfrac_core::fields::{linf_norm, TorusField, TorusGrid};
use msfrac_core::fraclap::closed_form_c_dalpha;
use msfrac_core::picard::{
    compute_constants, continuous_dependence_experiment, extend, iterate, verify_contraction, x_norm_distance,
    PdeParams,
};

fn grid() -> TorusGrid {
    TorusGrid::new(1, 2.0 * PI, 128).unwrap()
}

fn desk_params() -> PdeParams {
    PdeParams::new(1.0, 0.25, 2.0, 1.0, 1.0, 1).unwrap()
}

#[test]
fn desk_constants_match_a_hand_evaluation() {
    let g = grid();
    let theta0 = TorusField::from_fn(&g, |x| x[0].sin());
    let c = compute_constants(&theta0, &desk_params()).unwrap();
    assert!((c.m0 - 2.0).abs() < 1e-12 && (c.m1 - 2.0).abs() < 1e-12);
    let c_star = closed_form_c_dalpha(1, 0.25) * 2.0 / (0.25 * 0.5);
    // 2p|λ|M₁^p + μ M₀^{1/2} M₁^{1/2} = 16 + 2
    let kappa = c_star * (2.0 * 2.0 * 2f64.powi(2) + 2f64.sqrt() * 2f64.sqrt());
    let t0 = (1.0 / (kappa * kappa)).min(1.0 / kappa) / 16.0;
    assert!((c.kappa0 - kappa).abs() <= 1e-8 * kappa);
    assert!((c.t0 - t0).abs() <= 1e-8 * t0);
}

#[test]
fn viscosity_branch_scales_the_existence_time() {
    let g = grid();
    let theta0 = TorusField::from_fn(&g, |x| x[0].sin());
    let p1 = desk_params();
    let p4 = PdeParams { nu: 4.0, ..p1 };
    let (c1, c4) = (compute_constants(&theta0, &p1).unwrap(), compute_constants(&theta0, &p4).unwrap());
    assert_eq!(c1.kappa0, c4.kappa0);
    assert!(p4.nu < c4.kappa0);
    assert!((c4.t0 / c1.t0 - 4.0).abs() < 1e-12);
}

#[test]
fn larger_data_never_lengthens_the_existence_time() {
    let g = grid();
    let mut prev = f64::INFINITY;
    for amp in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let theta0 = TorusField::from_fn(&g, |x| amp * x[0].sin());
        let t0 = compute_constants(&theta0, &desk_params()).unwrap().t0;
        assert!(t0 <= prev);
        prev = t0;
    }
}

#[test]
fn desk_iterates_obey_uniform_bounds_and_the_envelope() {
    let g = grid();
    let p = desk_params();
    let theta0 = TorusField::from_fn(&g, |x| x[0].sin());
    let c = compute_constants(&theta0, &p).unwrap();
    let seq = iterate(&theta0, &p, &c, 8, c.t0 / 64.0).unwrap();
    for traj in &seq.iterates {
        assert!(traj.sup_norm.iter().all(|s| *s <= c.m0));
        assert!(traj.lip.iter().all(|l| *l <= c.m1));
    }
    let rep = verify_contraction(&seq).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert!(rep.envelope_margins.iter().all(|m| *m > 0.0));

    let next = extend(&seq).unwrap();
    let d_last = *rep.distances.last().unwrap();
    assert!(x_norm_distance(&next, seq.last()) <= 2.0 * d_last + 1e-12);
}

#[test]
fn linear_iterates_converge_to_the_multiplier_solution() {
    let g = grid();
    let p = PdeParams::new(1.0, 0.25, 2.0, 1.0, 0.0, 1).unwrap();
    let theta0 = TorusField::from_fn(&g, |x| x[0].sin() + 0.5 * (3.0 * x[0]).cos() + 0.2);
    let c = compute_constants(&theta0, &p).unwrap();
    let seq = iterate(&theta0, &p, &c, 8, c.t0 / 64.0).unwrap();
    let t0 = c.t0;
    let exact = theta0.apply_radial_multiplier(|k| (t0 * (-k * k + if k > 0.0 { k.sqrt() } else { 0.0 })).exp());
    let last = seq.last().states.last().unwrap();
    assert!(linf_norm(&last.sub(&exact)) < 1e-4);
    let rep = verify_contraction(&seq).unwrap();
    assert!(rep.pass);
    assert!(rep.ratios.iter().flatten().all(|r| *r <= 0.51));
    for traj in &seq.iterates {
        assert!(traj.states.iter().all(|s| (s.mean() - 0.2).abs() < 1e-12));
    }
}

#[test]
fn mean_moves_only_through_the_gradient_term() {
    let g = grid();
    let p = desk_params();
    let theta0 = TorusField::from_fn(&g, |x| x[0].sin());
    let c = compute_constants(&theta0, &p).unwrap();
    let seq = iterate(&theta0, &p, &c, 3, c.t0 / 64.0).unwrap();
    let dt = seq.times[1] - seq.times[0];
    let prev = &seq.iterates[1];
    let rate: Vec<f64> = prev
        .states
        .iter()
        .map(|s| {
            let grad = msfrac_core::fields::gradient(s);
            msfrac_core::fields::gradient_magnitude(&grad).iter().map(|v| v * v).sum::<f64>() / g.len() as f64
        })
        .collect();
    let last = seq.last();
    let mut integral = 0.0;
    for i in 1..seq.times.len() {
        integral += 0.5 * dt * (rate[i - 1] + rate[i]);
        assert!((last.states[i].mean() - theta0.mean() - integral).abs() < 1e-12);
    }
}

#[test]
fn iteration_commutes_with_translations() {
    let g = grid();
    let p = desk_params();
    let theta0 = TorusField::from_fn(&g, |x| x[0].sin() + 0.3 * (2.0 * x[0]).cos());
    let c = compute_constants(&theta0, &p).unwrap();
    let a = iterate(&theta0, &p, &c, 3, c.t0 / 64.0).unwrap();
    let b = iterate(&theta0.shifted([5, 0]), &p, &c, 3, c.t0 / 64.0).unwrap();
    for (x, y) in a.last().states.iter().zip(&b.last().states) {
        assert!(linf_norm(&x.shifted([5, 0]).sub(y)) < 1e-12);
    }
}

#[test]
fn identical_data_give_zero_difference() {
    let g = grid();
    let theta0 = TorusField::from_fn(&g, |x| x[0].sin());
    let rep = continuous_dependence_experiment(&theta0, &theta0, &desk_params(), 0.5, 1e-3).unwrap();
    assert!(rep.degenerate && rep.pass);
    assert!(rep.differences.iter().all(|d| *d <= 1e-10));
}

#[test]
fn linear_amplification_matches_the_symbol() {
    let g = grid();
    let p = PdeParams::new(1.0, 0.25, 2.0, 0.5, 0.0, 1).unwrap();
    let theta0 = TorusField::from_fn(&g, |x| x[0].sin());
    let theta1 = theta0.add(&TorusField::from_fn(&g, |x| 1e-4 * x[0].cos()));
    let rep = continuous_dependence_experiment(&theta0, &theta1, &p, 1.0, 1e-2).unwrap();
    for (t, r) in rep.times.iter().zip(&rep.ratios) {
        assert!((r - (t * (0.5 - 1.0)).exp()).abs() < 1e-6, "t = {t}: {r}");
    }
    assert!(rep.pass);
}

#[test]
fn nonlinear_amplification_stays_below_the_gronwall_bound() {
    let g = grid();
    let theta0 = TorusField::from_fn(&g, |x| x[0].sin());
    let mut finals = Vec::new();
    for eps in [1e-4, 1e-5] {
        let theta1 = theta0.add(&TorusField::from_fn(&g, |x| eps * x[0].cos()));
        let rep = continuous_dependence_experiment(&theta0, &theta1, &desk_params(), 1.0, 1e-3).unwrap();
        assert!(rep.pass);
        assert!(rep.ratios.iter().zip(&rep.bounds).all(|(r, b)| r <= b));
        finals.push(rep.ratios);
    }
    for (a, b) in finals[0].iter().zip(&finals[1]) {
        assert!((a - b).abs() <= 0.02 * b);
    }
}
