//! Picard construction of the local mild solution: the explicit constants
//! `M₀, M₁, κ₀, T₀`, the iterates `θ_k` on `[0, T₀]`, the contraction check
//! in the `C([0,T₀]; W^{1,∞})` norm, and the continuous-dependence experiment.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolve::{trajectory, SolverConfig};
use crate::fields::{gradient, gradient_magnitude, linf_norm, lipschitz_estimate, w1inf_norm, TorusField};
use crate::fraclap::{apply_spectral, interpolation_constant, FracOrder};
use crate::heatkernel::{duhamel_step, heat_propagate, GronwallInstance, HeatKernelParams};

pub use crate::params::PdeParams;

/// Relative slack before an iterate counts as violating `M₀`/`M₁`.
const BOUND_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PicardConstants {
    pub m0: f64,
    pub m1: f64,
    pub kappa0: f64,
    pub t0: f64,
    /// The generic constant `C*` entering `κ₀`.
    pub c_star: f64,
}

/// `C* = max{1, C_{d,α}|S^{d−1}|/(α(1−2α))}`: dominates the interpolation
/// constant and the heat-kernel gradient constant `C_d < 1`.
pub fn picard_constant(order: &FracOrder) -> f64 {
    interpolation_constant(order).max(1.0)
}

pub fn compute_constants(theta0: &TorusField, params: &PdeParams) -> Result<PicardConstants> {
    params.validate()?;
    if !theta0.is_finite() {
        return Err(Error::InvalidInput("initial data must be finite".into()));
    }
    let order = params.frac_order()?;
    let c_star = picard_constant(&order);
    let a = params.alpha;
    let m0 = 1.0 + linf_norm(theta0);
    let m1 = 1.0 + lipschitz_estimate(theta0);
    let kappa0 = c_star
        * (2.0 * params.p * params.lambda.abs() * m1.powf(params.p)
            + params.mu * m0.powf(1.0 - 2.0 * a) * m1.powf(2.0 * a));
    let t0 = if kappa0 > 0.0 {
        (params.nu / (kappa0 * kappa0)).min(1.0 / kappa0) / 16.0
    } else {
        f64::INFINITY
    };
    Ok(PicardConstants { m0, m1, kappa0, t0, c_star })
}

/// One iterate sampled on the common time grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<TorusField>,
    pub sup_norm: Vec<f64>,
    pub lip: Vec<f64>,
}

impl Trajectory {
    fn from_states(states: Vec<TorusField>) -> Self {
        let sup_norm = states.iter().map(linf_norm).collect();
        let lip = states.iter().map(lipschitz_estimate).collect();
        Self { states, sup_norm, lip }
    }
}

#[derive(Debug, Clone)]
pub struct PicardSequence {
    pub constants: PicardConstants,
    pub params: PdeParams,
    pub times: Vec<f64>,
    /// `iterates[k − 1]` holds `θ_k`.
    pub iterates: Vec<Trajectory>,
}

impl PicardSequence {
    pub fn last(&self) -> &Trajectory {
        self.iterates.last().expect("a sequence holds at least one iterate")
    }
}

/// `λ|∇θ|^p + μ(−Δ)^αθ`.
pub fn forcing(theta: &TorusField, params: &PdeParams, order: &FracOrder) -> Result<TorusField> {
    let grad = gradient(theta);
    let mag = gradient_magnitude(&grad);
    let nonlinear: Vec<f64> = mag.iter().map(|g| params.lambda * g.powf(params.p)).collect();
    let mut out = TorusField::new(theta.grid(), nonlinear)?;
    if params.mu != 0.0 {
        out = out.lin_comb(1.0, &apply_spectral(theta, order)?, params.mu);
    }
    Ok(out)
}

fn next_iterate(
    theta0: &TorusField,
    previous: &Trajectory,
    times: &[f64],
    params: &PdeParams,
    order: &FracOrder,
    heat: &HeatKernelParams,
) -> Result<Vec<TorusField>> {
    let history: Vec<(f64, TorusField)> = times
        .iter()
        .zip(&previous.states)
        .map(|(t, s)| Ok((*t, forcing(s, params, order)?)))
        .collect::<Result<_>>()?;
    let mut states = Vec::with_capacity(times.len());
    states.push(theta0.clone());
    for i in 1..times.len() {
        states.push(duhamel_step(theta0, &history[..=i], heat, times[i], 0.0)?);
    }
    Ok(states)
}

fn check_bounds(traj: &Trajectory, constants: &PicardConstants, k: usize) -> Result<()> {
    for (&s, &l) in traj.sup_norm.iter().zip(&traj.lip) {
        if s > constants.m0 * (1.0 + BOUND_SLACK) {
            return Err(Error::BoundViolation { iterate: k, quantity: "sup norm", value: s, bound: constants.m0 });
        }
        if l > constants.m1 * (1.0 + BOUND_SLACK) {
            return Err(Error::BoundViolation { iterate: k, quantity: "Lipschitz norm", value: l, bound: constants.m1 });
        }
    }
    Ok(())
}

/// Builds `θ₁, …, θ_{k_max}` on `[0, T₀]` with a uniform step `≤ dt`.
/// `θ₁` is the heat flow of `θ₀`; `θ_k` adds the trapezoidal Duhamel
/// integral of the forcing evaluated along `θ_{k−1}`.
pub fn iterate(
    theta0: &TorusField,
    params: &PdeParams,
    constants: &PicardConstants,
    k_max: usize,
    dt: f64,
) -> Result<PicardSequence> {
    params.validate()?;
    if k_max < 2 {
        return Err(Error::InvalidInput(format!("k_max must be at least 2 (got {k_max})")));
    }
    let t0 = constants.t0;
    if !t0.is_finite() {
        return Err(Error::InvalidInput("T0 is infinite (zero forcing); pick a finite horizon".into()));
    }
    if !(dt > 0.0 && dt <= t0 / 64.0 * (1.0 + 1e-12)) {
        return Err(Error::InvalidInput(format!("dt = {dt} must lie in (0, T0/64] with T0 = {t0}")));
    }
    let steps = (t0 / dt).ceil() as usize;
    let times: Vec<f64> = (0..=steps).map(|i| t0 * i as f64 / steps as f64).collect();
    let heat = HeatKernelParams::new(params.nu, params.dim)?;
    let order = params.frac_order()?;

    let first = times
        .iter()
        .map(|&t| heat_propagate(theta0, &heat, t))
        .collect::<Result<Vec<_>>>()?;
    let first = Trajectory::from_states(first);
    check_bounds(&first, constants, 1)?;
    let mut iterates = vec![first];
    for k in 2..=k_max {
        let states = next_iterate(theta0, iterates.last().unwrap(), &times, params, &order, &heat)?;
        let traj = Trajectory::from_states(states);
        check_bounds(&traj, constants, k)?;
        iterates.push(traj);
    }
    Ok(PicardSequence { constants: *constants, params: *params, times, iterates })
}

/// One more application of the iteration map to the last iterate.
pub fn extend(seq: &PicardSequence) -> Result<Trajectory> {
    let heat = HeatKernelParams::new(seq.params.nu, seq.params.dim)?;
    let order = seq.params.frac_order()?;
    let theta0 = &seq.iterates[0].states[0];
    let states = next_iterate(theta0, seq.last(), &seq.times, &seq.params, &order, &heat)?;
    Ok(Trajectory::from_states(states))
}

/// `max_t (‖a(t) − b(t)‖_∞ + Lip(a(t) − b(t)))`.
pub fn x_norm_distance(a: &Trajectory, b: &Trajectory) -> f64 {
    a.states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| w1inf_norm(&x.sub(y)))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    /// `d_k` for `k = 2, …, k_max`.
    pub distances: Vec<f64>,
    /// `2^{−(k−1)} + 10⁻⁶ − d_k`.
    pub envelope_margins: Vec<f64>,
    /// `d_k/d_{k−1}` for `k ≥ 3`; `None` once `d_{k−1}` is at roundoff level.
    pub ratios: Vec<Option<f64>>,
    pub pass: bool,
}

pub fn verify_contraction(seq: &PicardSequence) -> Result<ContractionReport> {
    if seq.iterates.len() < 3 {
        return Err(Error::InvalidInput("contraction check needs at least three iterates".into()));
    }
    let distances: Vec<f64> = seq
        .iterates
        .windows(2)
        .map(|w| x_norm_distance(&w[1], &w[0]))
        .collect();
    let envelope_margins: Vec<f64> = distances
        .iter()
        .enumerate()
        .map(|(i, d)| 2f64.powi(-(i as i32 + 1)) + 1e-6 - d)
        .collect();
    let ratios: Vec<Option<f64>> = distances
        .windows(2)
        .map(|w| if w[0] > 1e-12 { Some(w[1] / w[0]) } else { None })
        .collect();
    let pass = envelope_margins.iter().all(|m| *m >= 0.0)
        && ratios.iter().flatten().all(|r| *r <= 0.5 + 1e-2);
    Ok(ContractionReport { distances, envelope_margins, ratios, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub times: Vec<f64>,
    /// `‖θ(t) − φ(t)‖_{W^{1,∞}}`.
    pub differences: Vec<f64>,
    /// Differences over `‖θ₀ − θ₁‖_{W^{1,∞}}`; empty when the data coincide.
    pub ratios: Vec<f64>,
    /// Gronwall bound on the ratio at each time.
    pub bounds: Vec<f64>,
    /// `A = 2(μC* + p|λ| max_s(‖∇θ‖^{p−1} + ‖∇φ‖^{p−1}))`.
    pub a: f64,
    pub degenerate: bool,
    pub pass: bool,
}

/// Evolves both data to `t_end` and compares the `W^{1,∞}` amplification
/// with the Gronwall bound for `f(σ) = A((νσ)^{−1/2} + 1)`, `q = 3`.
pub fn continuous_dependence_experiment(
    theta0: &TorusField,
    theta1: &TorusField,
    params: &PdeParams,
    t_end: f64,
    dt: f64,
) -> Result<ContinuityReport> {
    if theta0.grid() != theta1.grid() {
        return Err(Error::GridMismatch("the two initial data live on different grids".into()));
    }
    let config = SolverConfig::new(*params, theta0.grid().clone(), dt, t_end)?;
    let a_run = trajectory(theta0, &config)?;
    let b_run = trajectory(theta1, &config)?;
    let times: Vec<f64> = a_run.iter().map(|(t, _)| *t).collect();
    let differences: Vec<f64> = a_run
        .iter()
        .zip(&b_run)
        .map(|((_, x), (_, y))| w1inf_norm(&x.sub(y)))
        .collect();
    let initial = w1inf_norm(&theta0.sub(theta1));
    let c_star = picard_constant(&params.frac_order()?);
    let pm1 = params.p - 1.0;
    let grad_term = a_run
        .iter()
        .zip(&b_run)
        .map(|((_, x), (_, y))| lipschitz_estimate(x).powf(pm1) + lipschitz_estimate(y).powf(pm1))
        .fold(0.0, f64::max);
    let a = 2.0 * (params.mu * c_star + params.p * params.lambda.abs() * grad_term);

    if initial == 0.0 {
        let pass = differences.iter().all(|d| *d <= 1e-10);
        return Ok(ContinuityReport {
            times,
            differences,
            ratios: Vec::new(),
            bounds: Vec::new(),
            a,
            degenerate: true,
            pass,
        });
    }
    let nu = params.nu;
    let t_last = *times.last().unwrap();
    let cells = (times.len() - 1).max(1) * 4;
    let instance = GronwallInstance::new(3.0, 1.0, 0.0, t_last, cells, move |s| a * ((nu * s).powf(-0.5) + 1.0))?;
    let ratios: Vec<f64> = differences.iter().map(|d| d / initial).collect();
    let bounds = times.iter().map(|t| instance.bound(*t)).collect::<Result<Vec<_>>>()?;
    let pass = ratios.iter().zip(&bounds).all(|(r, b)| r <= b);
    Ok(ContinuityReport { times, differences, ratios, bounds, a, degenerate: false, pass })
}
