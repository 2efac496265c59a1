//! Pseudo-spectral time integration: the linear symbol `−ν|k|² + μ|k|^{2α}`
//! is integrated exactly and `λ|∇θ|^p` is advanced with the two-stage
//! exponential time-differencing scheme of Cox and Matthews.

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{
    all_pairs, gradient, gradient_magnitude, holder_quotient_max, holder_seminorm, linf_norm, lipschitz_estimate,
    TorusField, TorusGrid,
};
use crate::modulus::{breakthrough_scan, scan_pairs, TimeModulus};
use crate::params::PdeParams;
use crate::picard::picard_constant;

pub const OVERFLOW_LIMIT: f64 = 1e12;
pub const GRADIENT_THRESHOLD: f64 = 1e6;
const HOLDER_SAMPLES: usize = 2000;
pub const DEFAULT_SCAN_SAMPLES: usize = 10_000;
pub const DEFAULT_SEED: u64 = 0x0b5e_12e5;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub params: PdeParams,
    pub grid: TorusGrid,
    pub dt: f64,
    pub t_end: f64,
    pub dealias: bool,
    pub record_every: usize,
    /// Keep the recorded states in the report (needed by the smoothing fit).
    pub keep_snapshots: bool,
    /// Stratified pairs drawn for the breakthrough scan.
    pub scan_samples: usize,
    /// Seed for every sampled pair set.
    pub seed: u64,
}

impl SolverConfig {
    /// Dealiasing defaults to on for `p ∈ {2, 3}`; every step is recorded.
    pub fn new(params: PdeParams, grid: TorusGrid, dt: f64, t_end: f64) -> Result<Self> {
        let dealias = params.p == 2.0 || params.p == 3.0;
        let config = Self {
            params,
            grid,
            dt,
            t_end,
            dealias,
            record_every: 1,
            keep_snapshots: false,
            scan_samples: DEFAULT_SCAN_SAMPLES,
            seed: DEFAULT_SEED,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.grid.dim() != self.params.dim {
            return Err(Error::GridMismatch(format!(
                "grid dimension {} differs from params.dim = {}",
                self.grid.dim(),
                self.params.dim
            )));
        }
        crate::error::check_range("dt", self.dt, self.dt > 0.0, "(0, inf)")?;
        crate::error::check_range("t_end", self.t_end, self.t_end > 0.0, "(0, inf)")?;
        if self.record_every == 0 {
            return Err(Error::InvalidInput("record_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize
    }

    /// Linear symbol `−ν|k|² + μ|k|^{2α}`.
    pub fn symbol(&self, k: f64) -> f64 {
        let p = &self.params;
        -p.nu * k * k + if k > 0.0 { p.mu * k.powf(2.0 * p.alpha) } else { 0.0 }
    }
}

fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    } else {
        z.exp_m1() / z
    }
}

fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-2 {
        let mut term = 0.5;
        let mut acc = 0.0;
        for n in 0..8 {
            acc += term;
            term *= z / (n as f64 + 3.0);
        }
        acc
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

struct Multipliers {
    h: f64,
    exp: Vec<f64>,
    phi1: Vec<f64>,
    phi2: Vec<f64>,
}

impl Multipliers {
    fn new(config: &SolverConfig, h: f64) -> Self {
        let grid = &config.grid;
        let n = grid.len();
        let (mut exp, mut p1, mut p2) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for idx in 0..n {
            let z = h * config.symbol(grid.wavenumber_norm(idx));
            exp.push(z.exp());
            p1.push(phi1(z));
            p2.push(phi2(z));
        }
        Self { h, exp, phi1: p1, phi2: p2 }
    }
}

/// Integrator for one configuration with precomputed multipliers.
pub struct Solver {
    config: SolverConfig,
    base: Multipliers,
    keep: Vec<bool>,
}

impl Solver {
    pub fn new(config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let base = Multipliers::new(&config, config.dt);
        let grid = &config.grid;
        let cutoff = grid.points_per_axis() as i64 / 3;
        let keep = (0..grid.len())
            .map(|idx| {
                let m = grid.mode(idx);
                !config.dealias || (m[0].abs() <= cutoff && m[1].abs() <= cutoff)
            })
            .collect();
        Ok(Self { config, base, keep })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// `λ|∇θ|^p` (dealiased when configured) and `max|∇θ|`.
    fn nonlinear(&self, theta: &TorusField) -> Result<(TorusField, f64)> {
        let p = &self.config.params;
        let mag = gradient_magnitude(&gradient(theta));
        let lip = mag.iter().cloned().fold(0.0, f64::max);
        if p.lambda == 0.0 {
            return Ok((TorusField::zeros(theta.grid()), lip));
        }
        let values = if p.p == 2.0 {
            mag.into_iter().map(|g| p.lambda * g * g).collect()
        } else {
            mag.into_iter().map(|g| p.lambda * g.powf(p.p)).collect()
        };
        let raw = TorusField::new(theta.grid(), values)?;
        let out = if self.config.dealias {
            raw.map_modes(|idx, c| if self.keep[idx] { c } else { Complex64::new(0.0, 0.0) })
        } else {
            raw
        };
        Ok((out, lip))
    }

    fn step_limit(&self, lip: f64) -> f64 {
        let p = &self.config.params;
        let rate = p.p * p.lambda.abs() * lip.powf(p.p - 1.0) * self.config.grid.max_wavenumber();
        if rate > 0.0 {
            0.5 / rate
        } else {
            f64::INFINITY
        }
    }

    /// Largest step allowed by `h·p|λ|Lip^{p−1}k_max ≤ 1/2`.
    pub fn stable_step(&self, theta: &TorusField) -> f64 {
        self.step_limit(lipschitz_estimate(theta))
    }

    fn etd2(
        &self,
        theta: &TorusField,
        n0: Option<TorusField>,
        t: f64,
        m: &Multipliers,
        source: Option<&dyn Fn(f64) -> TorusField>,
    ) -> Result<TorusField> {
        let h = m.h;
        let mut n0 = match n0 {
            Some(n) => n,
            None => self.nonlinear(theta)?.0,
        };
        if let Some(s) = source {
            n0 = n0.add(&s(t));
        }
        let n0s = n0.spectrum().to_vec();
        let a = theta.map_modes(|idx, c| c * m.exp[idx] + n0s[idx] * (h * m.phi1[idx]));
        let mut n1 = self.nonlinear(&a)?.0;
        if let Some(s) = source {
            n1 = n1.add(&s(t + h));
        }
        let n1s = n1.spectrum();
        let out = a.map_modes(|idx, c| c + (n1s[idx] - n0s[idx]) * (h * m.phi2[idx]));
        let t_next = t + h;
        if !out.is_finite() {
            return Err(Error::NonFinite { time: t_next });
        }
        let magnitude = linf_norm(&out);
        if magnitude > OVERFLOW_LIMIT {
            return Err(Error::Overflow { magnitude, time: t_next });
        }
        Ok(out)
    }

    /// Advances by `dt`, substepping when the explicit stability bound of
    /// the nonlinear term requires it.
    pub fn step(&self, theta: &TorusField, t: f64) -> Result<TorusField> {
        self.step_with_source(theta, t, None)
    }

    /// Same as [`Solver::step`] with an additive source `s(t)` on the right side.
    pub fn step_with_source(
        &self,
        theta: &TorusField,
        t: f64,
        source: Option<&dyn Fn(f64) -> TorusField>,
    ) -> Result<TorusField> {
        if theta.grid() != &self.config.grid {
            return Err(Error::GridMismatch("state lives on a different grid".into()));
        }
        if !theta.is_finite() {
            return Err(Error::NonFinite { time: t });
        }
        let dt = self.config.dt;
        let (n0, lip) = self.nonlinear(theta)?;
        let limit = self.step_limit(lip);
        if dt <= limit {
            return self.etd2(theta, Some(n0), t, &self.base, source);
        }
        let pieces = (dt / limit).ceil() as usize;
        log::debug!("substepping dt = {dt} into {pieces} pieces at t = {t}");
        let m = Multipliers::new(&self.config, dt / pieces as f64);
        let mut state = theta.clone();
        for i in 0..pieces {
            state = self.etd2(&state, None, t + i as f64 * m.h, &m, source)?;
        }
        Ok(state)
    }
}

/// One step from `theta` with a freshly built [`Solver`].
pub fn step(theta: &TorusField, config: &SolverConfig) -> Result<TorusField> {
    Solver::new(config.clone())?.step(theta, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    GradientThreshold,
    Overflow,
    Nan,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub times: Vec<f64>,
    pub linf: Vec<f64>,
    pub lip: Vec<f64>,
    /// `B e^{C₀t}` when a time modulus is attached.
    pub theory_bound: Vec<Option<f64>>,
    /// Minimum of `Ω(t,|x−y|) − |θ(x)−θ(y)|` over the scan pairs.
    pub modulus_min_margin: Vec<Option<f64>>,
    /// Sampled Hölder-½ seminorm of `∇θ`.
    pub holder_check: Vec<f64>,
    pub stopped_reason: StopReason,
    pub snapshots: Vec<TorusField>,
}

impl RunReport {
    /// `max_t (Lip(t) − B e^{C₀t})`, negative when the bound held throughout.
    pub fn worst_bound_excess(&self) -> Option<f64> {
        self.lip
            .iter()
            .zip(&self.theory_bound)
            .filter_map(|(l, b)| b.map(|b| l - b))
            .reduce(f64::max)
    }

    /// Least-squares slope of `log Lip(t)` in `t`. The sharpness of the
    /// exponential bound is not known, so this is recorded, not asserted.
    pub fn growth_exponent(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .times
            .iter()
            .zip(&self.lip)
            .filter(|(_, l)| **l > 0.0)
            .map(|(t, l)| (*t, l.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let num: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
        let den: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
        (den > 0.0).then(|| num / den)
    }
}

struct Recorder<'a> {
    report: RunReport,
    hook: Option<(&'a TimeModulus, Vec<crate::fields::PairSample>)>,
    keep: bool,
    seed: u64,
}

impl Recorder<'_> {
    fn record(&mut self, t: f64, theta: &TorusField) -> Result<()> {
        let r = &mut self.report;
        r.times.push(t);
        r.linf.push(linf_norm(theta));
        r.lip.push(lipschitz_estimate(theta));
        match &self.hook {
            Some((tm, pairs)) => {
                r.theory_bound.push(Some(tm.gradient_bound(t)));
                r.modulus_min_margin.push(Some(breakthrough_scan(theta, tm, t, pairs)?.worst_margin));
            }
            None => {
                r.theory_bound.push(None);
                r.modulus_min_margin.push(None);
            }
        }
        r.holder_check.push(holder_seminorm(theta, 0.5, HOLDER_SAMPLES, self.seed)?);
        if self.keep {
            r.snapshots.push(theta.clone());
        }
        Ok(())
    }
}

/// Integrates to `t_end`, recording every `record_every` steps (and the
/// final state). With a time modulus attached, each record also carries
/// the gradient bound and the breakthrough margin.
pub fn run(theta0: &TorusField, config: &SolverConfig, modulus_hook: Option<&TimeModulus>) -> Result<RunReport> {
    let solver = Solver::new(config.clone())?;
    if theta0.grid() != &config.grid {
        return Err(Error::GridMismatch("initial data lives on a different grid".into()));
    }
    let mut rec = Recorder {
        report: RunReport {
            times: Vec::new(),
            linf: Vec::new(),
            lip: Vec::new(),
            theory_bound: Vec::new(),
            modulus_min_margin: Vec::new(),
            holder_check: Vec::new(),
            stopped_reason: StopReason::Completed,
            snapshots: Vec::new(),
        },
        hook: modulus_hook.map(|tm| (tm, scan_pairs(theta0, config.scan_samples, config.seed))),
        seed: config.seed,
        keep: config.keep_snapshots,
    };
    if !theta0.is_finite() {
        rec.report.stopped_reason = StopReason::Nan;
        return Ok(rec.report);
    }
    rec.record(0.0, theta0)?;
    let steps = config.steps();
    let mut theta = theta0.clone();
    for n in 1..=steps {
        let t = (n - 1) as f64 * config.dt;
        theta = match solver.step(&theta, t) {
            Ok(next) => next,
            Err(Error::NonFinite { .. }) => {
                rec.report.stopped_reason = StopReason::Nan;
                break;
            }
            Err(Error::Overflow { .. }) => {
                rec.report.stopped_reason = StopReason::Overflow;
                break;
            }
            Err(e) => return Err(e),
        };
        let t_next = n as f64 * config.dt;
        let lip = lipschitz_estimate(&theta);
        if lip > GRADIENT_THRESHOLD {
            rec.record(t_next, &theta)?;
            rec.report.stopped_reason = StopReason::GradientThreshold;
            break;
        }
        if n % config.record_every == 0 || n == steps {
            rec.record(t_next, &theta)?;
        }
    }
    Ok(rec.report)
}

/// States at `t = 0` and after every `record_every` steps up to `t_end`.
pub fn trajectory(theta0: &TorusField, config: &SolverConfig) -> Result<Vec<(f64, TorusField)>> {
    let solver = Solver::new(config.clone())?;
    let steps = config.steps();
    let mut out = vec![(0.0, theta0.clone())];
    let mut theta = theta0.clone();
    for n in 1..=steps {
        theta = solver.step(&theta, (n - 1) as f64 * config.dt)?;
        if n % config.record_every == 0 || n == steps {
            out.push((n as f64 * config.dt, theta.clone()));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothingReport {
    pub beta: f64,
    pub times: Vec<f64>,
    pub seminorms: Vec<f64>,
    /// Smallest `A` with `[∇θ(t)]_β ≤ A(t^{−(1+β)/2} + t^{(1−β)/2})` on the samples.
    pub envelope_constant: f64,
    pub fitted_exponent: f64,
    pub expected_exponent: f64,
    pub pass: bool,
}

fn gradient_holder(theta: &TorusField, beta: f64) -> Result<f64> {
    if theta.grid().dim() == 1 {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::OutOfRange { name: "beta", value: beta, range: "(0, 1)" });
        }
        Ok(holder_quotient_max(&gradient(theta), &all_pairs(theta.grid()), beta))
    } else {
        holder_seminorm(theta, beta, 20_000, DEFAULT_SEED)
    }
}

/// Fits the Hölder-β seminorm of `∇θ(t)` on the recorded snapshots with
/// `t ∈ [t_min, 1]` against `A(t^{−(1+β)/2} + t^{(1−β)/2})`. The exponent is
/// the log-log slope over the same window.
pub fn check_parabolic_smoothing(report: &RunReport, beta: f64, t_min: f64) -> Result<SmoothingReport> {
    if report.snapshots.len() != report.times.len() {
        return Err(Error::InvalidInput("run was not recorded with keep_snapshots".into()));
    }
    let mut times = Vec::new();
    let mut seminorms = Vec::new();
    for (t, s) in report.times.iter().zip(&report.snapshots) {
        if *t >= t_min && *t <= 1.0 + 1e-12 && *t > 0.0 {
            times.push(*t);
            seminorms.push(gradient_holder(s, beta)?);
        }
    }
    if times.len() < 2 {
        return Err(Error::InvalidInput("fewer than two snapshots in [t_min, 1]".into()));
    }
    let envelope_constant = times
        .iter()
        .zip(&seminorms)
        .map(|(t, s)| s / (t.powf(-(1.0 + beta) / 2.0) + t.powf((1.0 - beta) / 2.0)))
        .fold(0.0, f64::max);
    let lx: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = seminorms.iter().map(|s| s.max(1e-300).ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Ok(SmoothingReport {
        beta,
        times,
        seminorms,
        envelope_constant,
        fitted_exponent: num / den,
        expected_exponent: -(1.0 + beta) / 2.0,
        pass: envelope_constant.is_finite(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    /// `A`, the largest recorded Lipschitz value.
    pub a: f64,
    pub bounds: Vec<f64>,
    /// `bound − ‖θ(t)‖_∞` per record.
    pub margins: Vec<f64>,
    pub pass: bool,
}

/// Checks `‖θ(t)‖_∞ ≤ y(t)` where `y` solves
/// `y′ = |λ|A^p + μC*A^{2α}((1−2α)y + 2α)`, `y(0) = ‖θ₀‖_∞`, which dominates
/// the integral inequality through `x^{1−2α} ≤ (1−2α)x + 2α`.
pub fn regularity_monitor(report: &RunReport, params: &PdeParams) -> Result<RegularityReport> {
    if report.times.is_empty() {
        return Err(Error::InvalidInput("empty run report".into()));
    }
    let c = picard_constant(&params.frac_order()?);
    let al = params.alpha;
    let a_lip = report.lip.iter().cloned().fold(0.0, f64::max);
    let growth = params.mu * c * a_lip.powf(2.0 * al);
    let rate = growth * (1.0 - 2.0 * al);
    let forcing = params.lambda.abs() * a_lip.powf(params.p) + 2.0 * al * growth;
    let (t1, y0) = (report.times[0], report.linf[0]);
    let bounds: Vec<f64> = report
        .times
        .iter()
        .map(|t| {
            let s = t - t1;
            if rate > 0.0 {
                (y0 + forcing / rate) * (rate * s).exp() - forcing / rate
            } else {
                y0 + forcing * s
            }
        })
        .collect();
    let margins: Vec<f64> = bounds.iter().zip(&report.linf).map(|(b, l)| b - l).collect();
    let pass = margins.iter().all(|m| *m >= -1e-12 * (1.0 + y0));
    Ok(RegularityReport { a: a_lip, bounds, margins, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn config(params: PdeParams, n: usize, dt: f64, t_end: f64) -> SolverConfig {
        SolverConfig::new(params, TorusGrid::new(params.dim, 2.0 * PI, n).unwrap(), dt, t_end).unwrap()
    }

    #[test]
    fn phi_functions_are_continuous_across_branches() {
        for z in [-1e-2, 1e-2, -1e-5, 1e-5] {
            let (a, b) = (z * (1.0 - 1e-9), z * (1.0 + 1e-9));
            assert!((phi1(a) - phi1(b)).abs() < 1e-10);
            assert!((phi2(a) - phi2(b)).abs() < 1e-10);
        }
        assert!((phi1(0.0) - 1.0).abs() < 1e-16 && (phi2(0.0) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn linear_step_is_exact_per_mode() {
        let p = PdeParams::new(0.7, 0.3, 2.0, 1.3, 0.0, 1).unwrap();
        let c = config(p, 32, 0.37, 1.0);
        let theta = TorusField::from_fn(&c.grid, |x| x[0].sin() + 0.5 * (3.0 * x[0]).cos());
        let out = step(&theta, &c).unwrap();
        let exact = theta.apply_radial_multiplier(|k| (0.37 * c.symbol(k)).exp());
        assert!(linf_norm(&out.sub(&exact)) < 1e-12);
    }

    #[test]
    fn constants_are_equilibria() {
        let p = PdeParams::new(1.0, 0.25, 2.0, 1.0, -3.0, 2).unwrap();
        let c = config(p, 16, 0.01, 1.0);
        let theta = TorusField::constant(&c.grid, 2.5);
        let out = step(&theta, &c).unwrap();
        assert!(linf_norm(&out.sub(&theta)) < 1e-14);
    }

    #[test]
    fn overflow_and_grid_checks() {
        let p = PdeParams::new(1.0, 0.25, 2.0, 1.0, 1.0, 1).unwrap();
        let c = config(p, 16, 0.01, 1.0);
        let big = TorusField::constant(&c.grid, 2e12);
        assert!(matches!(step(&big, &c), Err(Error::Overflow { .. })));
        let other = TorusField::zeros(&TorusGrid::new(1, 2.0 * PI, 32).unwrap());
        assert!(step(&other, &c).is_err());
    }

    #[test]
    fn zero_data_stays_zero() {
        let p = PdeParams::new(1.0, 0.25, 2.0, 1.0, 1.0, 1).unwrap();
        let c = config(p, 32, 0.01, 0.5);
        let rep = run(&TorusField::zeros(&c.grid), &c, None).unwrap();
        assert_eq!(rep.stopped_reason, StopReason::Completed);
        assert!(rep.linf.iter().all(|v| *v == 0.0));
        assert_eq!(rep.times.len(), rep.lip.len());
    }

    #[test]
    fn single_mode_gradient_decays_at_the_symbol_rate() {
        let p = PdeParams::new(1.0, 0.25, 2.0, 0.5, 0.0, 1).unwrap();
        let c = config(p, 32, 0.05, 1.0);
        let rep = run(&TorusField::from_fn(&c.grid, |x| x[0].sin()), &c, None).unwrap();
        let last = *rep.lip.last().unwrap();
        assert!((rep.times.last().unwrap() - 1.0).abs() < 1e-12);
        assert!((last - (-0.5f64).exp()).abs() < 1e-6, "{last}");
    }

    #[test]
    fn regularity_monitor_on_zero_and_linear_runs() {
        let p = PdeParams::new(1.0, 0.25, 2.0, 1.0, 0.0, 1).unwrap();
        let c = config(p, 32, 0.01, 1.0);
        let zero = run(&TorusField::zeros(&c.grid), &c, None).unwrap();
        let r = regularity_monitor(&zero, &p).unwrap();
        assert!(r.pass && r.bounds.iter().all(|b| *b >= 0.0));
        let lin = run(&TorusField::from_fn(&c.grid, |x| (2.0 * x[0]).cos()), &c, None).unwrap();
        assert!(regularity_monitor(&lin, &p).unwrap().pass);
    }
}
