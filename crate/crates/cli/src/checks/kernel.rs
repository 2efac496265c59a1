use std::f64::consts::PI;

use anyhow::Result;
use msfrac_core::fields::{linf_norm, random_band_limited, TorusField, TorusGrid};
use msfrac_core::heatkernel::{
    duhamel_step, gronwall_bound, heat_propagate, verify_kernel_identities, whole_space_convolution,
    GronwallInstance, HeatKernelParams, KernelIdentityReport,
};

use super::{fmt_sci, Ctx, Outcome};

const S_VALUES: [f64; 4] = [0.25, 0.5, 1.0, 2.0];

fn identities() -> Result<KernelIdentityReport> {
    Ok(verify_kernel_identities(&HeatKernelParams::new(1.0, 1)?, &S_VALUES)?)
}

pub fn semigroup(ctx: &Ctx) -> Result<Outcome> {
    let g = TorusGrid::new(1, 2.0 * PI, 64)?;
    let p = HeatKernelParams::new(1.0, 1)?;
    let s = TorusField::from_fn(&g, |x| x[0].sin());
    let eig = linf_norm(&heat_propagate(&s, &p, 1.0)?.sub(&s.scale((-1f64).exp())));
    let mut worst = 0.0f64;
    let mut principle = true;
    for i in 0..10 {
        let f = random_band_limited(&g, 6, ctx.seed().wrapping_add(i));
        let twice = heat_propagate(&heat_propagate(&f, &p, 0.1)?, &p, 0.3)?;
        let once = heat_propagate(&f, &p, 0.4)?;
        worst = worst.max(linf_norm(&twice.sub(&once)) / linf_norm(&f).max(1.0));
        principle &= (once.mean() - f.mean()).abs() < 1e-13;
        principle &= linf_norm(&once) <= linf_norm(&f) + 1e-12;
        principle &= once.min() >= f.min() - 1e-10 && once.max() <= f.max() + 1e-10;
    }
    let err = eig.max(worst);
    Ok(Outcome::with(
        principle && eig <= 1e-10 && worst <= 1e-12,
        1e-10 - err,
        format!("eigenfunction error {}, semigroup defect {}", fmt_sci(eig), fmt_sci(worst)),
    ))
}

pub fn periodization(ctx: &Ctx) -> Result<Outcome> {
    let p = HeatKernelParams::new(1.0, 1)?;
    let g = TorusGrid::new(1, 2.0 * PI, 32)?;
    let f = random_band_limited(&g, 5, ctx.seed());
    let s = 0.05;
    let spec = heat_propagate(&f, &p, s)?;
    let mut err = 0.0f64;
    for idx in [0, 5, 17, 31] {
        let q = whole_space_convolution(&f, &p, s, &[g.point(idx)[0]])?;
        err = err.max((q - spec.values()[idx]).abs());
    }
    let p2 = HeatKernelParams::new(0.5, 2)?;
    let g2 = TorusGrid::new(2, 2.0 * PI, 8)?;
    let f2 = TorusField::from_fn(&g2, |x| (x[0] + 2.0 * x[1]).sin() + (3.0 * x[1]).cos());
    let spec2 = heat_propagate(&f2, &p2, 0.1)?;
    let q = whole_space_convolution(&f2, &p2, 0.1, &g2.point(11))?;
    err = err.max((q - spec2.values()[11]).abs());
    Ok(Outcome::nonnegative(1e-9 - err, format!("max deviation from the periodized kernel {}", fmt_sci(err))))
}

pub fn mass(_: &Ctx) -> Result<Outcome> {
    let r = identities()?;
    let r2 = verify_kernel_identities(&HeatKernelParams::new(0.3, 2)?, &[0.5, 1.0])?;
    let err = r.mass_max_error.max(r2.mass_max_error);
    Ok(Outcome::nonnegative(1e-8 - err, format!("max |mass - 1| = {}", fmt_sci(err))))
}

pub fn gradient_constant(_: &Ctx) -> Result<Outcome> {
    let r = identities()?;
    let target = 1.0 / PI.sqrt();
    let const_err = r
        .gradient_constants
        .iter()
        .map(|c| ((c - target) / target).abs())
        .fold(0.0, f64::max);
    let exp_err = ((r.gradient_exponent + 0.5) / 0.5).abs();
    Ok(Outcome::with(
        const_err <= 1e-4 && exp_err <= 0.01,
        (1e-4 - const_err).min(0.01 - exp_err),
        format!("constant {:.8} (1/sqrt(pi) = {target:.8}), exponent {:.6}", r.gradient_constants[0], r.gradient_exponent),
    ))
}

pub fn dt_moments(_: &Ctx) -> Result<Outcome> {
    let r = identities()?;
    let worst = r
        .dt_moments
        .iter()
        .map(|m| ((m.fitted_exponent - m.expected_exponent) / m.expected_exponent).abs())
        .fold(0.0, f64::max);
    Ok(Outcome::nonnegative(0.01 - worst, format!("worst relative exponent deviation {}", fmt_sci(worst))))
}

pub fn difference_bounds(_: &Ctx) -> Result<Outcome> {
    let r = identities()?;
    let finite = r.lipschitz_constant.is_finite() && r.holder_constant.is_finite();
    Ok(Outcome::with(
        finite && r.lipschitz_constant > 0.0 && r.holder_constant > 0.0,
        if finite { 1.0 } else { -1.0 },
        format!("fitted Lipschitz constant {:.6}, Holder-1/2 constant {:.6}", r.lipschitz_constant, r.holder_constant),
    ))
}

pub fn duhamel(_: &Ctx) -> Result<Outcome> {
    let g = TorusGrid::new(1, 2.0 * PI, 16)?;
    let p = HeatKernelParams::new(1.0, 1)?;
    let c = TorusField::constant(&g, 0.3);
    let consts: Vec<(f64, TorusField)> = (0..5).map(|i| (i as f64 * 0.25, c.clone())).collect();
    let const_err = linf_norm(&duhamel_step(&c, &consts, &p, 1.0, 0.0)?.sub(&TorusField::constant(&g, 0.6)));

    // θ*(t, x) = cos(2t) sin x
    let exact = |t: f64| TorusField::from_fn(&g, move |x| (2.0 * t).cos() * x[0].sin());
    let forcing = |t: f64| TorusField::from_fn(&g, move |x| (-2.0 * (2.0 * t).sin() + (2.0 * t).cos()) * x[0].sin());
    let mut errs = Vec::new();
    for n in [8, 16, 32, 64] {
        let hist: Vec<(f64, TorusField)> = (0..=n).map(|i| (i as f64 / n as f64, forcing(i as f64 / n as f64))).collect();
        errs.push(linf_norm(&duhamel_step(&exact(0.0), &hist, &p, 1.0, 0.0)?.sub(&exact(1.0))));
    }
    let order = errs.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);
    Ok(Outcome::with(
        const_err < 1e-14 && order >= 1.9,
        order - 1.9,
        format!("observed order {order:.3}, constant forcing error {}", fmt_sci(const_err)),
    ))
}

pub fn gronwall_instance(_: &Ctx) -> Result<Outcome> {
    let zero = GronwallInstance::new(3.0, 2.0, 0.0, 1.0, 50, |_| 0.0)?;
    let mut zero_err = 0.0f64;
    for t in [0.0, 0.3, 1.0] {
        zero_err = zero_err.max((gronwall_bound(&zero, t)? - 2.0).abs());
    }
    let (a, nu) = (1.5, 0.5);
    let inst = GronwallInstance::new(3.0, 1.0, 0.0, 2.0, 200, move |s| a * ((nu * s).powf(-0.5) + 1.0))?;
    let mut monotone = true;
    let mut prev = f64::NEG_INFINITY;
    for i in 0..=40 {
        let b = inst.log_bound(i as f64 * 0.05)?;
        monotone &= b.is_finite() && b >= prev;
        prev = b;
    }
    monotone &= inst.with_c0(2.0).log_bound(1.0)? >= inst.log_bound(1.0)?;
    Ok(Outcome::with(
        monotone && zero_err <= 1e-12,
        1e-12 - zero_err,
        format!("zero-kernel deviation {}, log bound at t = 2: {prev:.4}", fmt_sci(zero_err)),
    ))
}

pub fn gronwall_premise(_: &Ctx) -> Result<Outcome> {
    let (a, nu, c0, t2, n) = (0.8, 1.0, 0.5, 1.0, 200);
    // exact primitive of f(σ) = A(1 + (νσ)^{−1/2})
    let prim = |s: f64| a * (s + 2.0 * (s / nu).sqrt());
    let dt = t2 / n as f64;
    let mut g = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let ti = i as f64 * dt;
        let mut acc = c0;
        for (j, gj) in g.iter().enumerate() {
            acc += gj * (prim(ti - j as f64 * dt) - prim(ti - (j + 1) as f64 * dt));
        }
        g.push(acc);
    }
    let inst = GronwallInstance::new(3.0, c0, 0.0, t2, n, move |s| a * ((nu * s).powf(-0.5) + 1.0))?;
    let mut worst = f64::INFINITY;
    for (i, gi) in g.iter().enumerate() {
        let log_b = inst.log_bound(i as f64 * dt)?;
        worst = worst.min(log_b - gi.ln());
    }
    Ok(Outcome::nonnegative(worst, format!("smallest log gap between bound and premise solution {worst:.4}")))
}
