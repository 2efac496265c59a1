use std::f64::consts::PI;

use anyhow::Result;
use msfrac_core::fields::{linf_norm, TorusField, TorusGrid};
use msfrac_core::fraclap::closed_form_c_dalpha;
use msfrac_core::picard::{compute_constants, continuous_dependence_experiment, iterate, verify_contraction};
use msfrac_core::{PdeParams, PicardSequence};

use super::{fmt_sci, rel_err, Ctx, Outcome};
use crate::presets::desk_params;

const K_MAX: usize = 8;

fn desk_grid() -> Result<TorusGrid> {
    Ok(TorusGrid::new(1, 2.0 * PI, 128)?)
}

fn desk_sequence() -> Result<PicardSequence> {
    let g = desk_grid()?;
    let theta0 = TorusField::from_fn(&g, |x| x[0].sin());
    let c = compute_constants(&theta0, &desk_params())?;
    Ok(iterate(&theta0, &desk_params(), &c, K_MAX, c.t0 / 64.0)?)
}

pub fn desk_constants(_: &Ctx) -> Result<Outcome> {
    let theta0 = TorusField::from_fn(&desk_grid()?, |x| x[0].sin());
    let c = compute_constants(&theta0, &desk_params())?;
    // C* = C|S⁰|/(α(1−2α)) with |S⁰| = 2, and κ₀ = C*(2p|λ|M₁^p + μM₀^{1/2}M₁^{1/2})
    let c_star = closed_form_c_dalpha(1, 0.25) * 2.0 / (0.25 * 0.5);
    let kappa = c_star * (2.0 * 2.0 * 4.0 + 2.0);
    let t0 = (1.0 / (kappa * kappa)).min(1.0 / kappa) / 16.0;
    let err = rel_err(c.kappa0, kappa).max(rel_err(c.t0, t0)).max((c.m0 - 2.0).abs()).max((c.m1 - 2.0).abs());
    Ok(Outcome::nonnegative(
        1e-8 - err,
        format!("M0 = {}, M1 = {}, kappa0 = {:.6}, T0 = {}", c.m0, c.m1, c.kappa0, fmt_sci(c.t0)),
    ))
}

pub fn uniform_bounds(_: &Ctx) -> Result<Outcome> {
    let seq = desk_sequence()?;
    let c = seq.constants;
    let mut margin = f64::INFINITY;
    for traj in &seq.iterates {
        for (s, l) in traj.sup_norm.iter().zip(&traj.lip) {
            margin = margin.min(c.m0 - s).min(c.m1 - l);
        }
    }
    Ok(Outcome::positive(margin, format!("{K_MAX} iterates; smallest gap below M0/M1 {margin:.4}")))
}

pub fn contraction(_: &Ctx) -> Result<Outcome> {
    let seq = desk_sequence()?;
    let rep = verify_contraction(&seq)?;
    let margin = rep.envelope_margins.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio = rep.ratios.iter().flatten().cloned().fold(0.0, f64::max);
    Ok(Outcome::with(
        rep.pass && margin > 0.0,
        margin,
        format!("d_2 = {}, largest ratio {ratio:.4}", fmt_sci(rep.distances[0])),
    ))
}

pub fn linear_limit(_: &Ctx) -> Result<Outcome> {
    let g = desk_grid()?;
    let p = PdeParams { lambda: 0.0, ..desk_params() };
    let theta0 = TorusField::from_fn(&g, |x| x[0].sin() + 0.5 * (3.0 * x[0]).cos() + 0.2);
    let c = compute_constants(&theta0, &p)?;
    let seq = iterate(&theta0, &p, &c, K_MAX, c.t0 / 64.0)?;
    let t0 = c.t0;
    let exact = theta0.apply_radial_multiplier(|k| (t0 * (-k * k + if k > 0.0 { k.sqrt() } else { 0.0 })).exp());
    let last = seq.last().states.last().expect("non-empty trajectory");
    let err = linf_norm(&last.sub(&exact));
    Ok(Outcome::nonnegative(1e-4 - err, format!("error at T0 {}", fmt_sci(err))))
}

fn desk_dependence(eps: f64) -> Result<msfrac_core::picard::ContinuityReport> {
    let g = desk_grid()?;
    let theta0 = TorusField::from_fn(&g, |x| x[0].sin());
    let theta1 = theta0.add(&TorusField::from_fn(&g, |x| eps * x[0].cos()));
    Ok(continuous_dependence_experiment(&theta0, &theta1, &desk_params(), 1.0, 1e-3)?)
}

pub fn continuous_dependence(_: &Ctx) -> Result<Outcome> {
    let rep = desk_dependence(1e-4)?;
    let margin = rep
        .ratios
        .iter()
        .zip(&rep.bounds)
        .skip(1)
        .map(|(r, b)| b.ln() - r.ln())
        .fold(f64::INFINITY, f64::min);
    let g = desk_grid()?;
    let same = TorusField::from_fn(&g, |x| x[0].sin());
    let degenerate = continuous_dependence_experiment(&same, &same, &desk_params(), 0.5, 1e-3)?;
    Ok(Outcome::with(
        rep.pass && degenerate.pass && margin >= 0.0,
        margin,
        format!("smallest log gap below the Gronwall bound {margin:.3}; final ratio {:.4}", rep.ratios.last().unwrap()),
    ))
}

pub fn linearization(_: &Ctx) -> Result<Outcome> {
    let a = desk_dependence(1e-4)?;
    let b = desk_dependence(1e-5)?;
    let worst = a.ratios.iter().zip(&b.ratios).map(|(x, y)| rel_err(*x, *y)).fold(0.0, f64::max);
    Ok(Outcome::nonnegative(0.02 - worst, format!("largest relative disagreement {}", fmt_sci(worst))))
}
