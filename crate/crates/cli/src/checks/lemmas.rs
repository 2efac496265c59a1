use std::f64::consts::PI;

use anyhow::Result;
use msfrac_core::fields::{
    all_pairs, gradient, holder_seminorm, linf_norm, random_band_limited, PairSample, TorusField, TorusGrid,
};
use msfrac_core::fraclap::{
    apply_pv_quadrature, apply_spectral, check_interpolation_bound, check_modulus_transfer,
    closed_form_c_dalpha, constant_c_dalpha, modulus_transfer, shell_cutoff_for_tolerance,
    DecayingFunction, FracOrder, Gaussian, LatticeSum,
};
use msfrac_core::modulus::{
    breakthrough_scan, check_gradient_strict_bound, check_touching_derivatives, construct_constants,
    dissipation_residual, fit_b, log_grid, omega_base, transfer_constant, Modulus, TheoryConstants,
};
use msfrac_core::PdeParams;

use super::{fmt_sci, rel_err, Ctx, Outcome};
use crate::presets::{desk_grid, desk_params, desk_theta0, evolution_presets};

const ALPHAS: [f64; 3] = [0.1, 0.25, 0.4];

/// Grid sizes for the operator sweeps; the lattice multipliers are the
/// expensive part in two dimensions.
fn sweep_grid(d: usize) -> Result<TorusGrid> {
    Ok(TorusGrid::new(d, 2.0 * PI, if d == 1 { 256 } else { 64 })?)
}

pub fn spectral_derivative(_: &Ctx) -> Result<Outcome> {
    let g = TorusGrid::new(2, 2.0 * PI, 64)?;
    let f = TorusField::from_fn(&g, |x| (3.0 * x[0]).sin() * (2.0 * x[1]).cos());
    let grad = gradient(&f);
    let ex = TorusField::from_fn(&g, |x| 3.0 * (3.0 * x[0]).cos() * (2.0 * x[1]).cos());
    let ey = TorusField::from_fn(&g, |x| -2.0 * (3.0 * x[0]).sin() * (2.0 * x[1]).sin());
    let err = linf_norm(&grad[0].sub(&ex)).max(linf_norm(&grad[1].sub(&ey)));
    Ok(Outcome::nonnegative(1e-10 - err, format!("max error {}", fmt_sci(err))))
}

pub fn holder_sampling(ctx: &Ctx) -> Result<Outcome> {
    let g = TorusGrid::new(1, 2.0 * PI, 64)?;
    let f = TorusField::from_fn(&g, |x| x[0].sin());
    let sampled = holder_seminorm(&f, 0.5, 10_000, ctx.seed())?;
    let grad = gradient(&f);
    let exact = all_pairs(&g)
        .iter()
        .map(|p| (grad[0].values()[p.x] - grad[0].values()[p.y]).abs() / p.separation.sqrt())
        .fold(0.0, f64::max);
    let rel = rel_err(sampled, exact);
    Ok(Outcome::with(
        sampled <= exact * (1.0 + 1e-12) && rel <= 0.05,
        0.05 - rel,
        format!("sampled {sampled:.6} vs all pairs {exact:.6}"),
    ))
}

pub fn multiplier(ctx: &Ctx) -> Result<Outcome> {
    let g = TorusGrid::new(1, 2.0 * PI, 64)?;
    let o = FracOrder::new(1, 0.25)?;
    let f = TorusField::from_fn(&g, |x| (2.0 * x[0]).cos());
    let err_mode = linf_norm(&apply_spectral(&f, &o)?.sub(&f.scale(2f64.sqrt())));
    let err_const = linf_norm(&apply_spectral(&TorusField::constant(&g, 3.7), &o)?);
    let mut min_pairing = f64::INFINITY;
    for i in 0..20 {
        let h = random_band_limited(&g, 8, ctx.seed().wrapping_add(i));
        let ah = apply_spectral(&h, &o)?;
        let pairing: f64 = h.values().iter().zip(ah.values()).map(|(a, b)| a * b).sum();
        min_pairing = min_pairing.min(pairing / g.len() as f64);
    }
    let err = err_mode.max(err_const);
    Ok(Outcome::with(
        err <= 1e-10 && min_pairing >= -1e-12,
        1e-10 - err,
        format!("mode error {}, constant image {}, min pairing {}", fmt_sci(err_mode), fmt_sci(err_const), fmt_sci(min_pairing)),
    ))
}

pub fn lattice_equivalence(ctx: &Ctx) -> Result<Outcome> {
    let count = ctx.config.samples.equivalence_fields;
    let mut worst = 0.0f64;
    let mut worst_case = String::new();
    for d in [1, 2] {
        let g = sweep_grid(d)?;
        for (ia, &a) in ALPHAS.iter().enumerate() {
            let o = FracOrder::new(d, a)?;
            let shells = shell_cutoff_for_tolerance(&g, &o, 1e-4);
            let lattice = LatticeSum::new(&g, &o, shells)?.with_tail_warning(1e-3);
            for i in 0..count {
                let seed = ctx.seed() ^ ((d as u64) << 40 | (ia as u64) << 32 | i as u64);
                let f = random_band_limited(&g, 4, seed);
                let spec = apply_spectral(&f, &o)?;
                let lat = lattice.apply(&f)?;
                let rel = linf_norm(&lat.sub(&spec)) / linf_norm(&spec);
                if rel > worst {
                    worst = rel;
                    worst_case = format!("d = {d}, alpha = {a}, field {i}");
                }
            }
        }
    }
    Ok(Outcome::nonnegative(1e-3 - worst, format!("worst relative error {} ({worst_case})", fmt_sci(worst))))
}

pub fn normalizing_constant(_: &Ctx) -> Result<Outcome> {
    let mut worst = 0.0f64;
    for d in [1, 2] {
        for a in ALPHAS {
            let q = constant_c_dalpha(d, a)?;
            worst = worst.max(rel_err(q, closed_form_c_dalpha(d, a)));
        }
    }
    Ok(Outcome::nonnegative(1e-8 - worst, format!("worst relative deviation {}", fmt_sci(worst))))
}

pub fn pv_big_box(_: &Ctx) -> Result<Outcome> {
    let o = FracOrder::new(1, 0.25)?;
    let gauss = Gaussian::new(1, 1.0, 1.0)?;
    let pv = apply_pv_quadrature(&gauss, &[0.0], &o)?;
    let l = 160.0;
    let g = TorusGrid::new(1, l, 4096)?;
    let f = TorusField::from_fn(&g, |x| {
        let y = if x[0] > l / 2.0 { x[0] - l } else { x[0] };
        gauss.value(&[y])
    });
    let spectral = apply_spectral(&f, &o)?.values()[0];
    let err = (spectral - pv).abs();
    Ok(Outcome::nonnegative(1e-3 - err, format!("quadrature {pv:.8} vs box L = {l}: {spectral:.8}")))
}

pub fn pv_decay(_: &Ctx) -> Result<Outcome> {
    let a = 0.25;
    let o = FracOrder::new(1, a)?;
    let gauss = Gaussian::new(1, 1.0, 1.0)?;
    let far = gauss.support_radius() + 10.0;
    let mut prev = f64::INFINITY;
    let mut monotone = true;
    let mut small_far = true;
    let mut worst = 0.0f64;
    for x in [far, 30.0, 60.0, 120.0] {
        let v = apply_pv_quadrature(&gauss, &[x], &o)?;
        let asymptote = -o.c_dalpha() * gauss.l1_norm() / x.powf(1.0 + 2.0 * a);
        worst = worst.max(rel_err(v, asymptote));
        monotone &= v.abs() < prev;
        prev = v.abs();
        if x >= 60.0 {
            small_far &= v.abs() <= 1e-3;
        }
    }
    Ok(Outcome::with(
        monotone && small_far && worst <= 0.05,
        0.05 - worst,
        format!("max deviation from the far-field asymptote {}", fmt_sci(worst)),
    ))
}

pub fn interpolation_bound(ctx: &Ctx) -> Result<Outcome> {
    let count = ctx.config.samples.interpolation_fields;
    let mut worst = f64::INFINITY;
    for d in [1, 2] {
        let g = sweep_grid(d)?;
        for (ia, &a) in ALPHAS.iter().enumerate() {
            let o = FracOrder::new(d, a)?;
            for i in 0..count {
                let seed = ctx.seed().wrapping_add(1_000_000 + (d * 100_000 + ia * 10_000 + i) as u64);
                let f = random_band_limited(&g, 4, seed);
                let r = check_interpolation_bound(&f, &o)?;
                worst = worst.min(r.margin / r.rhs);
            }
        }
    }
    Ok(Outcome::nonnegative(worst, format!("smallest relative margin {worst:.4}")))
}

pub fn transfer_closed_form(_: &Ctx) -> Result<Outcome> {
    let mut worst = 0.0f64;
    for (d, a) in [(1, 0.25), (2, 0.1), (1, 0.4)] {
        let o = FracOrder::new(d, a)?;
        let t = modulus_transfer(&Modulus::linear(), &o)?;
        let k = transfer_constant(&o);
        for xi in [1e-3_f64, 0.1, 1.0, 3.0, 50.0] {
            let exact = k * xi.powf(1.0 - 2.0 * a) / (1.0 - 2.0 * a);
            worst = worst.max(rel_err(t.value(xi), exact));
        }
    }
    let zero = modulus_transfer(&Modulus::zero(), &FracOrder::new(1, 0.25)?)?.value(1.0);
    Ok(Outcome::with(
        worst <= 1e-8 && zero == 0.0,
        1e-8 - worst,
        format!("worst relative deviation {}", fmt_sci(worst)),
    ))
}

pub fn transfer_sweep(ctx: &Ctx) -> Result<Outcome> {
    let pairs = ctx.config.samples.transfer_pairs;
    let mut worst = f64::INFINITY;
    let mut detail = String::new();
    let cases = [
        TorusField::from_fn(&TorusGrid::new(1, 2.0 * PI, 256)?, |x| x[0].sin()),
        TorusField::from_fn(&TorusGrid::new(2, 2.0 * PI, 64)?, |x| x[0].sin() + x[1].sin()),
    ];
    for theta in &cases {
        for a in ALPHAS {
            let d = theta.grid().dim();
            let w = omega_base(a)?;
            let b = fit_b(theta, &w)?;
            let o = FracOrder::new(d, a)?;
            let rep = check_modulus_transfer(theta, &w.scaled(b), &o, pairs, ctx.seed())?;
            if rep.worst_margin < worst {
                worst = rep.worst_margin;
                detail = format!("worst at d = {d}, alpha = {a}, {} pairs", rep.pairs_checked);
            }
        }
    }
    Ok(Outcome::nonnegative(worst, format!("smallest margin {} ({detail})", fmt_sci(worst))))
}

pub fn base_shape(_: &Ctx) -> Result<Outcome> {
    let mut ok = true;
    let mut slope_err = 0.0f64;
    for a in ALPHAS {
        let w = omega_base(a)?;
        ok &= (w.value(1.0) - 0.5).abs() < 1e-15;
        slope_err = slope_err.max((w.derivative(1e-12) - 1.0).abs());
        ok &= w.is_strong() && w.is_unbounded() && w.value(0.0) == 0.0;
        let shape = w.check_shape(&log_grid(1e-8, 1e4, 400), 1e-10);
        ok &= shape.nondecreasing && shape.concave;
        let scaled: Vec<f64> = [1e-4, 1e-6, 1e-8].iter().map(|x| w.second_derivative(*x) * x.powf(a)).collect();
        ok &= scaled.iter().all(|s| *s < 0.0 && s.is_finite());
        ok &= scaled.windows(2).all(|p| (p[0] / p[1]) > 0.5 && (p[0] / p[1]) < 2.0);
    }
    Ok(Outcome::with(ok && slope_err < 1e-6, 1e-6 - slope_err, format!("|omega'(0+) - 1| = {}", fmt_sci(slope_err))))
}

fn strict_margin(theta: &TorusField, omega: &Modulus, pairs: &[PairSample]) -> f64 {
    let v = theta.values();
    pairs
        .iter()
        .map(|p| omega.value(p.separation) - (v[p.x] - v[p.y]).abs())
        .fold(f64::INFINITY, f64::min)
}

pub fn fit_b_strict(_: &Ctx) -> Result<Outcome> {
    let theta = desk_theta0();
    let w = omega_base(0.25)?;
    let b = fit_b(&theta, &w)?;
    let margin = strict_margin(&theta, &w.scaled(b), &all_pairs(theta.grid()));
    let zero_b = fit_b(&TorusField::zeros(theta.grid()), &w)?;
    let wide = TorusGrid::new(1, 4.0 * PI, 512)?;
    let b_wide = fit_b(&TorusField::from_fn(&wide, |x| x[0].sin()), &w)?;
    Ok(Outcome::with(
        margin > 0.0 && w.value(b) > 3.0 && w.value(zero_b) > 1.0 && b_wide == b,
        margin,
        format!("B = {b}, all-pairs margin {}, doubled period B = {b_wide}", fmt_sci(margin)),
    ))
}

pub fn gradient_strict_bound(_: &Ctx) -> Result<Outcome> {
    let w = omega_base(0.25)?;
    let g = desk_grid();
    let mut worst = f64::INFINITY;
    for amp in [0.0, 0.1, 1.0, 3.0] {
        let theta = TorusField::from_fn(&g, |x| amp * x[0].sin());
        let b = fit_b(&theta, &w)?;
        let rep = check_gradient_strict_bound(&theta, &w.scaled(b));
        worst = worst.min(rep.margin / rep.slope_at_zero);
    }
    Ok(Outcome::positive(worst, format!("smallest relative gap below B omega'(0): {worst:.4}")))
}

pub fn touching(_: &Ctx) -> Result<Outcome> {
    let seps = [0.1, 0.5, 1.0, 2.0];
    let tanh = Modulus::new(
        "2tanh(x/2)",
        |x| {
            let (t, s) = ((0.5 * x).tanh(), 1.0 / (0.5 * x).cosh().powi(2));
            [2.0 * t, s, -s * t]
        },
        1.0,
        false,
        false,
    );
    let a = 0.25;
    let base = omega_base(a)?;
    let profile = Modulus::new(
        "2 omega(x/2)",
        move |x| {
            let [v, d1, d2] = base.eval_all(0.5 * x);
            [2.0 * v, d1, 0.5 * d2]
        },
        1.0,
        true,
        true,
    );
    let g_profile = move |s: f64| s.signum() * s.abs() / (1.0 + s.abs().powf(1.0 - a));
    let reports = [
        check_touching_derivatives(&|s: f64| s.tanh(), &tanh, &seps)?,
        check_touching_derivatives(&|s: f64| s, &Modulus::linear(), &seps)?,
        check_touching_derivatives(&g_profile, &profile, &seps)?,
    ];
    let pass = reports.iter().all(|r| r.pass);
    let margin = reports
        .iter()
        .map(|r| (1e-8 - r.max_gradient_error.max(r.max_value_error)).min(1e-6 - r.max_laplacian_gap_error))
        .fold(f64::INFINITY, f64::min);
    let odd_rejected = check_touching_derivatives(&|s: f64| s * s, &tanh, &seps).is_err();
    Ok(Outcome::with(pass && odd_rejected, margin, format!("smallest tolerance headroom {}", fmt_sci(margin))))
}

pub fn growth_constants(_: &Ctx) -> Result<Outcome> {
    let mut worst = f64::INFINITY;
    let mut notes = Vec::new();
    for p in evolution_presets() {
        let theta = p.theta0()?;
        let (c, tm) = TheoryConstants::compute(&theta, &p.params)?;
        let k = transfer_constant(&p.params.frac_order()?);
        let residual = log_grid(c.delta0 * 1e-10, c.delta0, 300)
            .into_iter()
            .map(|x| dissipation_residual(tm.omega_b(), c.b, &p.params, k, x))
            .fold(f64::NEG_INFINITY, f64::max);
        worst = worst.min(-residual);
    }
    let theta = desk_theta0();
    let b = fit_b(&theta, &omega_base(0.25)?)?;
    for a in [0.1, 0.25, 0.4, 0.45] {
        let params = PdeParams { alpha: a, ..desk_params() };
        let bb = fit_b(&theta, &omega_base(a)?)?;
        let gc = construct_constants(bb, &params)?;
        if !(gc.c0.is_finite() && gc.delta0 > 1e-12) {
            notes.push(format!("alpha = {a} degenerate"));
        }
    }
    let mut prev: Option<(f64, f64)> = None;
    for nu in [1.0, 2.0, 4.0, 8.0, 16.0] {
        let gc = construct_constants(b, &PdeParams { nu, ..desk_params() })?;
        if let Some((d, c)) = prev {
            if gc.delta0 < d || gc.c0 > c {
                notes.push(format!("not monotone at nu = {nu}"));
            }
        }
        prev = Some((gc.delta0, gc.c0));
    }
    let detail = if notes.is_empty() {
        format!("largest dissipation residual {}", fmt_sci(-worst))
    } else {
        notes.join("; ")
    };
    Ok(Outcome::with(notes.is_empty() && worst > 0.0, worst, detail))
}

pub fn breakthrough_detector(_: &Ctx) -> Result<Outcome> {
    let g = TorusGrid::new(1, 2.0 * PI, 128)?;
    let (_, tm) = TheoryConstants::compute(&desk_theta0(), &desk_params())?;
    let pairs = all_pairs(&g);
    let t = 0.0;
    let zero = breakthrough_scan(&TorusField::zeros(&g), &tm, t, &pairs)?;

    // odd about c and about c + π, touching Ω(t,·) on the symmetric pairs
    let c = PI;
    let signed = move |x: f64| {
        let r = x - c;
        if r.abs() <= PI / 2.0 {
            r
        } else {
            r.signum() * (PI - r.abs())
        }
    };
    let tm2 = tm.clone();
    let touching = TorusField::from_fn(&g, move |x| {
        let s = signed(x[0]);
        (1.0 + 1e-9) * s.signum() * tm2.value(t, 2.0 * s.abs()) / 2.0
    });
    let rep = breakthrough_scan(&touching, &tm, t, &pairs)?;
    let (sx, sy) = (signed(g.point(rep.worst_pair.x)[0]), signed(g.point(rep.worst_pair.y)[0]));
    let straddles = (sx + sy).abs() < 1e-9 && sx * sy < 0.0;
    Ok(Outcome::with(
        !zero.found && zero.worst_margin > 0.0 && rep.found && straddles,
        zero.worst_margin,
        format!("zero data margin {}, touching profile margin {}", fmt_sci(zero.worst_margin), fmt_sci(rep.worst_margin)),
    ))
}
