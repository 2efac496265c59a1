use std::f64::consts::PI;

use anyhow::Result;
use msfrac_core::evolve::{check_parabolic_smoothing, regularity_monitor, run, step, trajectory};
use msfrac_core::fields::{linf_norm, rough_field, TorusField, TorusGrid};
use msfrac_core::{PdeParams, Solver, SolverConfig};

use super::{fmt_sci, Ctx, Outcome};

fn config(params: PdeParams, n: usize, dt: f64, t_end: f64) -> Result<SolverConfig> {
    Ok(SolverConfig::new(params, TorusGrid::new(params.dim, 2.0 * PI, n)?, dt, t_end)?)
}

pub fn linear_exactness(_: &Ctx) -> Result<Outcome> {
    let mut worst = 0.0f64;
    for (dim, n) in [(1, 64), (2, 16)] {
        let p = PdeParams::new(0.7, 0.3, 2.0, 1.3, 0.0, dim)?;
        let c = config(p, n, 0.37, 1.0)?;
        let theta = TorusField::from_fn(&c.grid, |x| {
            let y = if dim > 1 { x[1] } else { 0.0 };
            x[0].sin() + 0.5 * (3.0 * x[0] - y).cos() + 0.1
        });
        let exact = theta.apply_radial_multiplier(|k| (0.37 * c.symbol(k)).exp());
        worst = worst.max(linf_norm(&step(&theta, &c)?.sub(&exact)));
    }
    Ok(Outcome::nonnegative(1e-12 - worst, format!("max per-mode deviation {}", fmt_sci(worst))))
}

pub fn linear_oracle(_: &Ctx) -> Result<Outcome> {
    let p = PdeParams::new(1.0, 0.25, 2.0, 1.0, 0.0, 1)?;
    let mut c = config(p, 256, 1e-3, 1.0)?;
    c.record_every = 100;
    let theta0 = TorusField::from_fn(&c.grid, |x| x[0].sin() + 0.5 * (2.0 * x[0]).cos());
    let mut worst = 0.0f64;
    for (t, s) in trajectory(&theta0, &c)? {
        let exact = theta0.apply_radial_multiplier(|k| (t * c.symbol(k)).exp());
        worst = worst.max(linf_norm(&s.sub(&exact)));
    }
    Ok(Outcome::nonnegative(1e-6 - worst, format!("max deviation from the multiplier solution {}", fmt_sci(worst))))
}

/// Error at `t = 1` against `θ* = e^{−t} sin x` driven by the matching source.
fn manufactured_error(dt: f64) -> Result<f64> {
    let (nu, mu, lambda) = (1.0, 0.5, 0.1);
    let params = PdeParams::new(nu, 0.25, 2.0, mu, lambda, 1)?;
    let cfg = config(params, 16, dt, 1.0)?;
    let grid = cfg.grid.clone();
    let solver = Solver::new(cfg.clone())?;
    let g2 = grid.clone();
    let source = move |t: f64| {
        TorusField::from_fn(&g2, |x| {
            (-1.0 + nu - mu) * (-t).exp() * x[0].sin() - lambda * (-2.0 * t).exp() * x[0].cos().powi(2)
        })
    };
    let mut theta = TorusField::from_fn(&grid, |x| x[0].sin());
    for i in 0..cfg.steps() {
        theta = solver.step_with_source(&theta, i as f64 * dt, Some(&source))?;
    }
    let exact = TorusField::from_fn(&grid, |x| (-1f64).exp() * x[0].sin());
    Ok(linf_norm(&theta.sub(&exact)))
}

pub fn manufactured_order(_: &Ctx) -> Result<Outcome> {
    let errs = [0.1, 0.05, 0.025, 0.0125].iter().map(|dt| manufactured_error(*dt)).collect::<Result<Vec<_>>>()?;
    let order = errs.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);
    Ok(Outcome::nonnegative(order - 1.85, format!("observed temporal order {order:.3}")))
}

pub fn gradient_max_principle(_: &Ctx) -> Result<Outcome> {
    let mut worst = f64::INFINITY;
    for lambda in [1.0, -1.0] {
        let params = PdeParams::new(1.0, 0.25, 2.0, 0.0, lambda, 1)?;
        let mut cfg = config(params, 256, 1e-3, 1.0)?;
        cfg.record_every = 10;
        let theta0 = TorusField::from_fn(&cfg.grid, |x| x[0].sin() + 0.5 * (2.0 * x[0]).cos());
        let rep = run(&theta0, &cfg, None)?;
        let lip0 = rep.lip[0];
        let peak = rep.lip.iter().cloned().fold(0.0, f64::max);
        worst = worst.min(1e-3 - (peak - lip0) / lip0);
    }
    Ok(Outcome::nonnegative(worst, format!("headroom below 1e-3 relative growth {}", fmt_sci(worst))))
}

pub fn self_convergence(_: &Ctx) -> Result<Outcome> {
    let params = PdeParams::new(1.0, 0.25, 2.0, 1.0, 1.0, 1)?;
    let finals = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|dt| {
            let cfg = config(params, 64, *dt, 0.5)?;
            let theta0 = TorusField::from_fn(&cfg.grid, |x| x[0].sin());
            Ok(trajectory(&theta0, &cfg)?.pop().expect("non-empty trajectory").1)
        })
        .collect::<Result<Vec<_>>>()?;
    let factor = linf_norm(&finals[0].sub(&finals[1])) / linf_norm(&finals[1].sub(&finals[2]));

    let run_at = |n| -> Result<TorusField> {
        let cfg = config(params, n, 1e-3, 0.5)?;
        let theta0 = TorusField::from_fn(&cfg.grid, |x| x[0].sin());
        Ok(trajectory(&theta0, &cfg)?.pop().expect("non-empty trajectory").1)
    };
    let (coarse, fine) = (run_at(64)?, run_at(128)?);
    let spatial = coarse
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| (v - fine.values()[2 * i]).abs())
        .fold(0.0, f64::max);
    Ok(Outcome::with(
        factor >= 3.6 && spatial < 1e-6,
        factor - 3.6,
        format!("self-convergence factor {factor:.3}, resolution doubling change {}", fmt_sci(spatial)),
    ))
}

pub fn parabolic_smoothing(ctx: &Ctx) -> Result<Outcome> {
    let params = PdeParams::new(1.0, 0.25, 2.0, 1.0, 1.0, 1)?;
    let mut cfg = config(params, 256, 1e-3, 1.0)?;
    cfg.record_every = 10;
    cfg.keep_snapshots = true;
    let rough = rough_field(&cfg.grid, 0.75, ctx.seed());
    let rep = run(&rough, &cfg, None)?;
    let half = check_parabolic_smoothing(&rep, 0.5, 0.01)?;
    let (lo, hi) = (3.0 * half.expected_exponent, half.expected_exponent / 3.0);
    let exponent_ok = half.fitted_exponent >= lo && half.fitted_exponent <= hi;
    let sharp = check_parabolic_smoothing(&rep, 1.0 - 2.0 * params.alpha, 0.01)?;
    let smooth = TorusField::from_fn(&cfg.grid, |x| x[0].sin());
    let s = check_parabolic_smoothing(&run(&smooth, &cfg, None)?, 0.5, 0.01)?;
    let margin = (half.fitted_exponent - lo).min(hi - half.fitted_exponent);
    Ok(Outcome::with(
        half.pass && sharp.pass && s.pass && exponent_ok,
        margin,
        format!(
            "fitted exponent {:.3} (expected {:.3}), envelope constants {:.4} / {:.4}",
            half.fitted_exponent, half.expected_exponent, half.envelope_constant, sharp.envelope_constant
        ),
    ))
}

pub fn sup_norm_monitor(_: &Ctx) -> Result<Outcome> {
    let mut worst = f64::INFINITY;
    let mut pass = true;
    for (lambda, p) in [(1.0, 1.0), (-1.0, 2.0), (1.0, 2.0), (-1.0, 3.0), (0.0, 2.0)] {
        let params = PdeParams::new(1.0, 0.25, p, 1.0, lambda, 1)?;
        let mut cfg = config(params, 128, 1e-3, 1.0)?;
        cfg.record_every = 20;
        let theta0 = TorusField::from_fn(&cfg.grid, |x| x[0].sin() + 0.3 * (3.0 * x[0]).cos());
        let mon = regularity_monitor(&run(&theta0, &cfg, None)?, &params)?;
        pass &= mon.pass;
        worst = worst.min(mon.margins.iter().cloned().fold(f64::INFINITY, f64::min));
    }
    Ok(Outcome::with(pass, worst, format!("smallest sup-norm margin {}", fmt_sci(worst))))
}
