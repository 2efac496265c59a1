use anyhow::{Context, Result};
use msfrac_core::fraclap::modulus_transfer;
use msfrac_core::modulus::{breakthrough_rhs, log_grid};
use msfrac_core::{run, SolverConfig, StopReason, TheoryConstants, TorusField};

use super::{fmt_sci, Ctx, Outcome, PresetRun};
use crate::config::ExperimentConfig;
use crate::presets::EvolutionPreset;

pub fn evolve_preset(preset: &EvolutionPreset, config: &ExperimentConfig) -> Result<PresetRun> {
    let cfg = preset.solver_config(config.samples.scan_pairs, config.seed)?;
    evolve_with_modulus(preset.name, preset.theta0()?, &cfg)
}

/// Assembles the time modulus for `theta0` and integrates with it attached.
pub fn evolve_with_modulus(name: &str, theta0: TorusField, cfg: &SolverConfig) -> Result<PresetRun> {
    let (constants, modulus) =
        TheoryConstants::compute(&theta0, &cfg.params).with_context(|| format!("constants for {name}"))?;
    let report = run(&theta0, cfg, Some(&modulus)).with_context(|| format!("evolving {name}"))?;
    Ok(PresetRun { name: name.to_string(), params: cfg.params, t_end: cfg.t_end, theta0, constants, modulus, report })
}

pub fn construction(_: &Ctx, r: &PresetRun) -> Result<Outcome> {
    let c = &r.constants;
    let ok = c.delta0 > 1e-12 && c.c0.is_finite() && c.c0 > 0.0 && c.b >= 1.0;
    Ok(Outcome::with(ok, c.delta0, format!("B = {}, delta0 = {}, C0 = {}", c.b, fmt_sci(c.delta0), fmt_sci(c.c0))))
}

/// The assembled right side on ten equal steps of `[0, t_end]` × 200 log-spaced
/// `ξ ∈ [10⁻⁶, 10³]`.
pub fn inequality(_: &Ctx, r: &PresetRun) -> Result<Outcome> {
    let params = &r.params;
    let transfer = modulus_transfer(r.modulus.omega_b(), &params.frac_order()?)?;
    let xis = log_grid(1e-6, 1e3, 200);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..=10 {
        let t = r.t_end * i as f64 / 10.0;
        for &xi in &xis {
            worst = worst.max(breakthrough_rhs(&r.modulus, params, &transfer, t, xi));
        }
    }
    Ok(Outcome::positive(-worst, format!("largest right side {}", fmt_sci(worst))))
}

pub fn completed(_: &Ctx, r: &PresetRun) -> Result<Outcome> {
    let last = *r.report.times.last().unwrap_or(&0.0);
    Ok(Outcome::with(
        r.report.stopped_reason == StopReason::Completed,
        last - r.t_end * (1.0 - 1e-12),
        format!("stopped: {:?} at t = {last}", r.report.stopped_reason),
    ))
}

pub fn gradient_bound(_: &Ctx, r: &PresetRun) -> Result<Outcome> {
    let rep = &r.report;
    let all_below = rep.lip.iter().zip(&rep.theory_bound).all(|(l, b)| b.is_some_and(|b| *l < b));
    let excess = rep.worst_bound_excess().unwrap_or(f64::NAN);
    let growth = rep.growth_exponent().unwrap_or(f64::NAN);
    Ok(Outcome::with(
        all_below && rep.stopped_reason == StopReason::Completed,
        -excess,
        format!("{} records, worst Lip - bound {}, empirical growth exponent {growth:.4}", rep.times.len(), fmt_sci(excess)),
    ))
}

pub fn no_breakthrough(_: &Ctx, r: &PresetRun) -> Result<Outcome> {
    let margins: Vec<f64> = r.report.modulus_min_margin.iter().map(|m| m.unwrap_or(f64::NAN)).collect();
    let worst = margins.iter().cloned().fold(f64::INFINITY, f64::min);
    let ok = !margins.is_empty() && margins.iter().all(|m| *m > 0.0);
    Ok(Outcome::with(ok, worst, format!("smallest modulus margin {}", fmt_sci(worst))))
}
